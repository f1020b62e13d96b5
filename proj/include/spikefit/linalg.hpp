#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace spikefit {

// N observations in R^d, stored observation-major: observation i occupies
// values[i*d, (i+1)*d). Invariants: d >= 2, N >= 1, every entry finite.
class DataMatrix {
 public:
  DataMatrix(std::size_t dim, std::size_t count, std::vector<double> values);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t count() const noexcept { return count_; }
  std::span<const double> observation(std::size_t i) const {
    return {values_.data() + i * dim_, dim_};
  }
  std::span<const double> values() const noexcept { return values_; }
  double operator()(std::size_t i, std::size_t f) const { return values_[i * dim_ + f]; }

  // ||Y||_F^2, accumulated in index order.
  double frobenius_sq() const;

 private:
  std::size_t dim_;
  std::size_t count_;
  std::vector<double> values_;
};

// Dense symmetric matrix, row-major. Entries are exactly symmetric.
class SymMatrix {
 public:
  explicit SymMatrix(std::size_t dim);  // zero matrix
  // Validates exact symmetry and finiteness.
  SymMatrix(std::size_t dim, std::vector<double> entries);
  // Copies the upper triangle (c >= r) of a row-major buffer to the lower one.
  static SymMatrix from_upper(std::size_t dim, std::vector<double> entries);
  static SymMatrix identity(std::size_t dim, double scale = 1.0);
  // scale * x x^T + shift * I
  static SymMatrix rank_one_plus_identity(std::span<const double> x, double scale, double shift);

  std::size_t dim() const noexcept { return dim_; }
  double operator()(std::size_t r, std::size_t c) const { return entries_[r * dim_ + c]; }
  std::span<const double> row(std::size_t r) const { return {entries_.data() + r * dim_, dim_}; }
  std::span<const double> entries() const noexcept { return entries_; }

  double trace() const;
  // out = A x
  void multiply(std::span<const double> x, std::span<double> out) const;

 private:
  SymMatrix(std::size_t dim, std::vector<double> entries, bool checked);

  std::size_t dim_;
  std::vector<double> entries_;
};

// sum_i w_i y_i y_i^T, accumulated in index order.
SymMatrix weighted_scatter(const DataMatrix& y, std::span<const double> w);

// Same sum restricted to {i : w_i >= delta / ||Y||_F^2}. The dropped mass has
// operator norm at most delta, so lambda_1 moves by at most delta.
SymMatrix thresholded_scatter(const DataMatrix& y, std::span<const double> w, double delta);

struct EigenPair {
  double value = 0.0;
  std::vector<double> vector;  // unit norm, first nonzero coordinate positive
  int iterations = 0;
  double residual = 0.0;  // ||A v - value v||
};

// Largest eigenvalue and a unit eigenvector of a symmetric PSD matrix by power
// iteration from the normalized all-ones vector. When plain iteration stalls on
// a small spectral gap the iteration continues on repeated squares of A, which
// is power iteration with exponent 2^m. Converged when
// ||A v - lambda v|| <= tol * max(1, lambda). Throws ConvergenceError otherwise.
EigenPair leading_eigenpair(const SymMatrix& a, double tol = 1e-12, int max_iter = 20000);

// Lower Cholesky factor of a symmetric positive definite matrix.
class Cholesky {
 public:
  // nullopt if a pivot is not strictly positive.
  static std::optional<Cholesky> factor(const SymMatrix& a);

  std::size_t dim() const noexcept { return dim_; }
  double log_det() const;
  // x^T A^{-1} x
  double mahalanobis_sq(std::span<const double> x) const;

 private:
  Cholesky(std::size_t dim, std::vector<double> lower) : dim_(dim), lower_(std::move(lower)) {}

  std::size_t dim_;
  std::vector<double> lower_;
};

}  // namespace spikefit
