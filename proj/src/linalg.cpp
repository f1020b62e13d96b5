#include "spikefit/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "spikefit/errors.hpp"
#include "spikefit/kernels.hpp"

namespace spikefit {

DataMatrix::DataMatrix(std::size_t dim, std::size_t count, std::vector<double> values)
    : dim_(dim), count_(count), values_(std::move(values)) {
  if (dim_ < 2) throw ArgumentError("DataMatrix: dimension must be at least 2");
  if (count_ < 1) throw ArgumentError("DataMatrix: need at least one observation");
  if (values_.size() != dim_ * count_) {
    throw ArgumentError("DataMatrix: expected " + std::to_string(dim_ * count_) + " values, got " +
                        std::to_string(values_.size()));
  }
  for (double v : values_) {
    if (!std::isfinite(v)) throw ArgumentError("DataMatrix: non-finite entry");
  }
}

double DataMatrix::frobenius_sq() const {
  double total = 0.0;
  for (std::size_t i = 0; i < count_; ++i) {
    total += kernels::sq_norm(values_.data() + i * dim_, dim_);
  }
  return total;
}

SymMatrix::SymMatrix(std::size_t dim) : dim_(dim), entries_(dim * dim, 0.0) {}

SymMatrix::SymMatrix(std::size_t dim, std::vector<double> entries, bool)
    : dim_(dim), entries_(std::move(entries)) {}

SymMatrix::SymMatrix(std::size_t dim, std::vector<double> entries)
    : dim_(dim), entries_(std::move(entries)) {
  if (entries_.size() != dim_ * dim_) throw ArgumentError("SymMatrix: wrong entry count");
  for (std::size_t r = 0; r < dim_; ++r) {
    for (std::size_t c = 0; c < dim_; ++c) {
      const double v = entries_[r * dim_ + c];
      if (!std::isfinite(v)) throw ArgumentError("SymMatrix: non-finite entry");
      if (v != entries_[c * dim_ + r]) throw ArgumentError("SymMatrix: matrix is not symmetric");
    }
  }
}

SymMatrix SymMatrix::from_upper(std::size_t dim, std::vector<double> entries) {
  if (entries.size() != dim * dim) throw ArgumentError("SymMatrix: wrong entry count");
  for (std::size_t r = 0; r < dim; ++r) {
    for (std::size_t c = r; c < dim; ++c) {
      if (!std::isfinite(entries[r * dim + c])) throw ArgumentError("SymMatrix: non-finite entry");
      entries[c * dim + r] = entries[r * dim + c];
    }
  }
  return SymMatrix(dim, std::move(entries), true);
}

SymMatrix SymMatrix::identity(std::size_t dim, double scale) {
  SymMatrix m(dim);
  for (std::size_t i = 0; i < dim; ++i) m.entries_[i * dim + i] = scale;
  return m;
}

SymMatrix SymMatrix::rank_one_plus_identity(std::span<const double> x, double scale, double shift) {
  const std::size_t d = x.size();
  std::vector<double> e(d * d, 0.0);
  kernels::syr_upper(e.data(), d, scale, x.data());
  for (std::size_t i = 0; i < d; ++i) e[i * d + i] += shift;
  return from_upper(d, std::move(e));
}

double SymMatrix::trace() const {
  double t = 0.0;
  for (std::size_t i = 0; i < dim_; ++i) t += entries_[i * dim_ + i];
  return t;
}

void SymMatrix::multiply(std::span<const double> x, std::span<double> out) const {
  for (std::size_t r = 0; r < dim_; ++r) out[r] = kernels::dot(entries_.data() + r * dim_, x.data(), dim_);
}

namespace {

void check_weights(const DataMatrix& y, std::span<const double> w) {
  if (w.size() != y.count()) {
    throw ArgumentError("scatter: expected " + std::to_string(y.count()) + " weights, got " +
                        std::to_string(w.size()));
  }
  for (double wi : w) {
    if (!std::isfinite(wi)) throw ArgumentError("scatter: non-finite weight");
    if (wi < 0.0) throw ArgumentError("scatter: negative weight");
  }
}

SymMatrix scatter_above(const DataMatrix& y, std::span<const double> w, double threshold) {
  const std::size_t d = y.dim();
  std::vector<double> acc(d * d, 0.0);
  for (std::size_t i = 0; i < y.count(); ++i) {
    if (w[i] == 0.0 || w[i] < threshold) continue;
    kernels::syr_upper(acc.data(), d, w[i], y.observation(i).data());
  }
  return SymMatrix::from_upper(d, std::move(acc));
}

double norm2(std::span<const double> v) { return std::sqrt(kernels::sq_norm(v.data(), v.size())); }

void canonicalize_sign(std::vector<double>& v) {
  double max_abs = 0.0;
  for (double x : v) max_abs = std::max(max_abs, std::abs(x));
  const double cutoff = 1e-12 * max_abs;
  for (double x : v) {
    if (std::abs(x) > cutoff) {
      if (x < 0.0) {
        for (double& y : v) y = -y;
      }
      return;
    }
  }
}

struct PowerState {
  std::vector<double> v;
  double lambda = 0.0;
  double residual = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Rayleigh quotient and residual of the current unit vector; leaves A v in w.
void evaluate(const SymMatrix& a, PowerState& s, std::vector<double>& w) {
  a.multiply(s.v, w);
  s.lambda = kernels::dot(s.v.data(), w.data(), s.v.size());
  double r2 = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double t = w[i] - s.lambda * s.v[i];
    r2 += t * t;
  }
  s.residual = std::sqrt(r2);
}

bool apply_normalized(const SymMatrix& b, std::vector<double>& v, std::vector<double>& w) {
  b.multiply(v, w);
  const double n = norm2(w);
  if (!(n > 0.0) || !std::isfinite(n)) return false;
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = w[i] / n;
  return true;
}

// B <- B*B / max|B*B|. Returns false once the square underflows to zero.
bool square_in_place(SymMatrix& b) {
  const std::size_t d = b.dim();
  std::vector<double> sq(d * d, 0.0);
  for (std::size_t r = 0; r < d; ++r) {
    for (std::size_t c = r; c < d; ++c) {
      sq[r * d + c] = kernels::dot(b.row(r).data(), b.row(c).data(), d);
    }
  }
  double max_abs = 0.0;
  for (std::size_t r = 0; r < d; ++r) {
    for (std::size_t c = r; c < d; ++c) max_abs = std::max(max_abs, std::abs(sq[r * d + c]));
  }
  if (!(max_abs > 0.0) || !std::isfinite(max_abs)) return false;
  for (double& x : sq) x /= max_abs;
  b = SymMatrix::from_upper(d, std::move(sq));
  return true;
}

PowerState run_power(const SymMatrix& a, std::vector<double> start, double tol, int max_iter) {
  const std::size_t d = a.dim();
  PowerState s;
  s.v = std::move(start);
  const double n0 = norm2(s.v);
  for (double& x : s.v) x /= n0;
  std::vector<double> w(d);

  auto done = [&] { return s.residual <= tol * std::max(1.0, s.lambda); };

  constexpr int kPlainBudget = 128;
  const int plain = std::min(max_iter, kPlainBudget);
  evaluate(a, s, w);
  while (!done() && s.iterations < plain) {
    if (!apply_normalized(a, s.v, w)) return s;
    ++s.iterations;
    evaluate(a, s, w);
  }
  if (done()) {
    s.converged = true;
    return s;
  }

  // Small spectral gap: iterate with B = A^(2^m), rescaled each round.
  double max_abs = 0.0;
  for (double x : a.entries()) max_abs = std::max(max_abs, std::abs(x));
  std::vector<double> scaled(a.entries().begin(), a.entries().end());
  for (double& x : scaled) x /= max_abs;
  SymMatrix b = SymMatrix::from_upper(d, std::move(scaled));
  while (s.iterations < max_iter) {
    if (!square_in_place(b)) break;
    if (!apply_normalized(b, s.v, w)) break;
    ++s.iterations;
    evaluate(a, s, w);
    if (done()) {
      s.converged = true;
      return s;
    }
    // Polish with the original matrix; the squares can lose relative accuracy.
    for (int k = 0; k < 4 && s.iterations < max_iter; ++k) {
      if (!apply_normalized(a, s.v, w)) break;
      ++s.iterations;
      evaluate(a, s, w);
      if (done()) {
        s.converged = true;
        return s;
      }
    }
  }
  return s;
}

}  // namespace

SymMatrix weighted_scatter(const DataMatrix& y, std::span<const double> w) {
  check_weights(y, w);
  return scatter_above(y, w, 0.0);
}

SymMatrix thresholded_scatter(const DataMatrix& y, std::span<const double> w, double delta) {
  check_weights(y, w);
  if (!(delta >= 0.0) || !std::isfinite(delta)) {
    throw ArgumentError("thresholded_scatter: delta must be finite and non-negative");
  }
  if (delta == 0.0) return scatter_above(y, w, 0.0);
  const double fro = y.frobenius_sq();
  if (fro == 0.0) return SymMatrix(y.dim());
  return scatter_above(y, w, delta / fro);
}

EigenPair leading_eigenpair(const SymMatrix& a, double tol, int max_iter) {
  const std::size_t d = a.dim();
  if (d == 0) throw ArgumentError("leading_eigenpair: empty matrix");
  if (!(tol > 0.0)) throw ArgumentError("leading_eigenpair: tol must be positive");
  if (max_iter < 1) throw ArgumentError("leading_eigenpair: max_iter must be positive");

  double max_abs = 0.0;
  double max_diag = 0.0;
  std::size_t argmax_diag = 0;
  for (std::size_t i = 0; i < d; ++i) {
    if (a(i, i) > max_diag) {
      max_diag = a(i, i);
      argmax_diag = i;
    }
    for (std::size_t j = 0; j < d; ++j) max_abs = std::max(max_abs, std::abs(a(i, j)));
  }
  if (max_abs == 0.0) {
    EigenPair zero;
    zero.vector.assign(d, 0.0);
    zero.vector[0] = 1.0;
    return zero;
  }

  PowerState s = run_power(a, std::vector<double>(d, 1.0), tol, max_iter);

  // lambda_1 >= max_i A_ii for PSD A. Falling short means the start vector had
  // no component along the dominant eigenspace; retry from a perturbed start.
  const double slack = 1e-9 * max_abs;
  if (!s.converged || s.lambda < max_diag - slack) {
    std::vector<double> start(d, 1.0);
    for (std::size_t i = 0; i < d; ++i) start[i] += 0.5 * std::sin(static_cast<double>(i + 1));
    start[argmax_diag] += static_cast<double>(d);
    PowerState retry = run_power(a, std::move(start), tol, max_iter);
    if (retry.converged && (!s.converged || retry.lambda > s.lambda)) {
      retry.iterations += s.iterations;
      s = std::move(retry);
    }
  }
  if (!s.converged) {
    throw ConvergenceError("leading_eigenpair: no convergence within " + std::to_string(max_iter) +
                               " iterations, residual " + std::to_string(s.residual),
                           s.residual);
  }

  EigenPair out;
  out.value = std::max(0.0, s.lambda);
  out.vector = std::move(s.v);
  out.iterations = s.iterations;
  out.residual = s.residual;
  canonicalize_sign(out.vector);
  return out;
}

std::optional<Cholesky> Cholesky::factor(const SymMatrix& a) {
  const std::size_t d = a.dim();
  std::vector<double> l(d * d, 0.0);
  for (std::size_t j = 0; j < d; ++j) {
    double diag = a(j, j) - kernels::sq_norm(l.data() + j * d, j);
    if (!(diag > 0.0) || !std::isfinite(diag)) return std::nullopt;
    const double ljj = std::sqrt(diag);
    l[j * d + j] = ljj;
    for (std::size_t i = j + 1; i < d; ++i) {
      const double s = a(i, j) - kernels::dot(l.data() + i * d, l.data() + j * d, j);
      l[i * d + j] = s / ljj;
    }
  }
  return Cholesky(d, std::move(l));
}

double Cholesky::log_det() const {
  double s = 0.0;
  for (std::size_t i = 0; i < dim_; ++i) s += std::log(lower_[i * dim_ + i]);
  return 2.0 * s;
}

double Cholesky::mahalanobis_sq(std::span<const double> x) const {
  // Forward substitution L z = x; result is ||z||^2.
  std::vector<double> z(dim_);
  for (std::size_t i = 0; i < dim_; ++i) {
    const double s = x[i] - kernels::dot(lower_.data() + i * dim_, z.data(), i);
    z[i] = s / lower_[i * dim_ + i];
  }
  return kernels::sq_norm(z.data(), dim_);
}

}  // namespace spikefit
