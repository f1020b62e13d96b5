#include "spikefit/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>
#include <optional>
#include <string>

#include "spikefit/errors.hpp"
#include "spikefit/kernels.hpp"
#include "spikefit/parallel.hpp"

namespace spikefit::baselines {

namespace {

constexpr double kLn2Pi = 1.8378770664093454835606594728112;
constexpr double kFrozenGammaFraction = 1e-12;
constexpr double kInitBlend = 0.1;

void check_covs(std::span<const SymMatrix> covs) {
  if (covs.empty()) throw ArgumentError("need at least one covariance matrix");
  const std::size_t d = covs.front().dim();
  if (d < 2) throw ArgumentError("covariances must have dimension at least 2");
  for (const auto& c : covs) {
    if (c.dim() != d) throw ArgumentError("covariances differ in dimension");
  }
}

// sum_i w_i (y_i - mu)(y_i - mu)^T / total, plus ridge * trace/d * I if that
// is not positive definite.
SymMatrix weighted_covariance(const DataMatrix& y, std::span<const double> w, double total,
                              std::span<const double> mu, double ridge) {
  const std::size_t d = y.dim();
  std::vector<double> acc(d * d, 0.0);
  std::vector<double> centered(d);
  for (std::size_t i = 0; i < y.count(); ++i) {
    if (w[i] == 0.0) continue;
    const auto yi = y.observation(i);
    for (std::size_t f = 0; f < d; ++f) centered[f] = yi[f] - mu[f];
    kernels::syr_upper(acc.data(), d, w[i], centered.data());
  }
  double trace = 0.0;
  for (std::size_t r = 0; r < d; ++r) {
    for (std::size_t c = r; c < d; ++c) acc[r * d + c] /= total;
    trace += acc[r * d + r];
  }
  SymMatrix cov = SymMatrix::from_upper(d, acc);
  if (Cholesky::factor(cov)) return cov;
  const double shift = ridge * std::max(trace, std::numeric_limits<double>::min()) / static_cast<double>(d);
  for (std::size_t r = 0; r < d; ++r) acc[r * d + r] += shift;
  return SymMatrix::from_upper(d, std::move(acc));
}

}  // namespace

void GmmParams::validate() const {
  const std::size_t k = weights.size();
  if (k == 0) throw ArgumentError("GmmParams: need at least one component");
  if (means.size() != k || covs.size() != k) throw ArgumentError("GmmParams: component counts differ");
  const std::size_t d = means.front().size();
  double total = 0.0;
  for (std::size_t c = 0; c < k; ++c) {
    if (means[c].size() != d || covs[c].dim() != d) throw ArgumentError("GmmParams: dimension mismatch");
    if (!(weights[c] >= 0.0 && weights[c] <= 1.0)) throw ArgumentError("GmmParams: weight outside [0, 1]");
    total += weights[c];
  }
  if (std::abs(total - 1.0) > 1e-12 * static_cast<double>(k) + 1e-12) {
    throw ArgumentError("GmmParams: weights do not sum to 1");
  }
}

GmmEStep gmm_e_step(const DataMatrix& y, const GmmParams& params) {
  params.validate();
  const std::size_t n = y.count();
  const std::size_t d = y.dim();
  const std::size_t k = params.components();
  if (params.dim() != d) throw ArgumentError("gmm_e_step: dimension mismatch");

  std::vector<Cholesky> chol;
  std::vector<double> log_norm(k);
  chol.reserve(k);
  for (std::size_t c = 0; c < k; ++c) {
    auto f = Cholesky::factor(params.covs[c]);
    if (!f) {
      throw ConvergenceError("gmm: covariance " + std::to_string(c + 1) + " is not positive definite",
                             0.0);
    }
    log_norm[c] = (params.weights[c] > 0.0 ? std::log(params.weights[c])
                                           : -std::numeric_limits<double>::infinity()) -
                  0.5 * static_cast<double>(d) * kLn2Pi - 0.5 * f->log_det();
    chol.push_back(std::move(*f));
  }

  smm::Responsibilities rho(n, k);
  std::vector<double> logits(k);
  std::vector<double> centered(d);
  double loglik = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto yi = y.observation(i);
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < k; ++c) {
      for (std::size_t f = 0; f < d; ++f) centered[f] = yi[f] - params.means[c][f];
      logits[c] = log_norm[c] - 0.5 * chol[c].mahalanobis_sq(centered);
      best = std::max(best, logits[c]);
    }
    if (!std::isfinite(best)) throw NumericError("gmm_e_step: every component has zero weight");
    double sum = 0.0;
    for (double& t : logits) {
      t = std::exp(t - best);
      sum += t;
    }
    for (std::size_t c = 0; c < k; ++c) rho(i, c) = logits[c] / sum;
    loglik += best + std::log(sum);
  }
  return {std::move(rho), loglik};
}

double gmm_log_likelihood(const DataMatrix& y, const GmmParams& params) {
  return gmm_e_step(y, params).loglik;
}

GmmParams gmm_m_step(const DataMatrix& y, const smm::Responsibilities& rho, const GmmOptions& options) {
  const std::size_t n = y.count();
  const std::size_t d = y.dim();
  const std::size_t k = rho.components();
  if (rho.rows() != n) throw ArgumentError("gmm_m_step: responsibilities and data differ in N");

  std::vector<double> gammas(k, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < k; ++c) gammas[c] += rho(i, c);
  }

  GmmParams p;
  p.weights.resize(k);
  p.means.assign(k, std::vector<double>(d, 0.0));
  p.covs.reserve(k);

  // Frozen components fall back to the pooled statistics.
  std::optional<std::pair<std::vector<double>, SymMatrix>> pooled;
  auto pooled_stats = [&]() -> const std::pair<std::vector<double>, SymMatrix>& {
    if (!pooled) {
      std::vector<double> ones(n, 1.0);
      std::vector<double> mu(d, 0.0);
      if (!options.zero_mean) {
        for (std::size_t i = 0; i < n; ++i) kernels::axpy(1.0, y.observation(i).data(), mu.data(), d);
        for (double& m : mu) m /= static_cast<double>(n);
      }
      SymMatrix cov = weighted_covariance(y, ones, static_cast<double>(n), mu, options.ridge);
      pooled.emplace(std::move(mu), std::move(cov));
    }
    return *pooled;
  };

  for (std::size_t c = 0; c < k; ++c) {
    p.weights[c] = std::min(1.0, gammas[c] / static_cast<double>(n));
    if (gammas[c] < kFrozenGammaFraction * static_cast<double>(n)) {
      const auto& ps = pooled_stats();
      p.means[c] = ps.first;
      p.covs.push_back(ps.second);
      continue;
    }
    const std::vector<double> w = rho.column(c);
    if (!options.zero_mean) {
      for (std::size_t i = 0; i < n; ++i) {
        if (w[i] != 0.0) kernels::axpy(w[i], y.observation(i).data(), p.means[c].data(), d);
      }
      for (double& m : p.means[c]) m /= gammas[c];
    }
    p.covs.push_back(weighted_covariance(y, w, gammas[c], p.means[c], options.ridge));
  }
  return p;
}

GmmParams gmm_random_init(const DataMatrix& y, std::size_t k, const GmmOptions& options, Rng& rng) {
  const std::size_t n = y.count();
  const std::size_t d = y.dim();
  if (k > n) throw ArgumentError("gmm_random_init: K exceeds N");
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  for (std::size_t j = 0; j < k; ++j) {
    const std::size_t pick = j + static_cast<std::size_t>(rng.below(n - j));
    std::swap(idx[j], idx[pick]);
  }

  smm::Responsibilities rho(n, k);
  const double base = kInitBlend / static_cast<double>(k);
  for (std::size_t i = 0; i < n; ++i) {
    const double* yi = y.observation(i).data();
    std::size_t best = 0;
    double best_score = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < k; ++c) {
      const double* seed = y.observation(idx[c]).data();
      double score;
      if (options.zero_mean) {
        const double ny = kernels::sq_norm(yi, d);
        const double ns = kernels::sq_norm(seed, d);
        const double dp = kernels::dot(yi, seed, d);
        score = (ny > 0.0 && ns > 0.0) ? -std::abs(dp) / std::sqrt(ny * ns) : 0.0;
      } else {
        score = kernels::sq_dist(yi, seed, d);
      }
      if (score < best_score) {
        best_score = score;
        best = c;
      }
    }
    for (std::size_t c = 0; c < k; ++c) rho(i, c) = base + (c == best ? 1.0 - kInitBlend : 0.0);
  }
  return gmm_m_step(y, rho, options);
}

GmmRun::GmmRun(const DataMatrix& y, GmmParams init, GmmOptions options)
    : y_(&y), options_(options), params_(std::move(init)), estep_(gmm_e_step(y, params_)) {
  trace_.push_back(estep_.loglik);
}

void GmmRun::step() {
  params_ = gmm_m_step(*y_, estep_.rho, options_);
  estep_ = gmm_e_step(*y_, params_);
  trace_.push_back(estep_.loglik);
}

GmmFitResult gmm_fit(const DataMatrix& y, const smm::FitConfig& config, const GmmOptions& options) {
  config.validate();
  if (y.count() <= config.k * y.dim()) {
    throw ArgumentError("gmm_fit: need N > K*d (N = " + std::to_string(y.count()) +
                        ", K*d = " + std::to_string(config.k * y.dim()) + ")");
  }
  const auto n1 = static_cast<std::size_t>(config.sieve.n1);
  const auto n2 = static_cast<std::size_t>(config.sieve.n2);
  const Rng master(config.rng_seed);

  std::vector<std::unique_ptr<GmmRun>> runs(n1);
  parallel_for(n1, config.jobs, [&](std::size_t s) {
    Rng rng = master.split(s);
    runs[s] = std::make_unique<GmmRun>(y, gmm_random_init(y, config.k, options, rng), options);
    for (int t = 0; t < config.sieve.d1; ++t) runs[s]->step();
  });

  auto score = [&](std::size_t s) {
    const double ll = runs[s]->loglik();
    return std::isnan(ll) ? -std::numeric_limits<double>::infinity() : ll;
  };
  std::vector<std::size_t> order(n1);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return score(a) > score(b); });
  order.resize(n2);

  parallel_for(n2, config.jobs, [&](std::size_t slot) {
    GmmRun& run = *runs[order[slot]];
    for (int t = 0; t < config.sieve.d2; ++t) {
      const double before = run.loglik();
      run.step();
      if (run.loglik() - before < config.conv_threshold) break;
    }
  });
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return score(a) > score(b); });

  smm::FitReport report;
  report.starts.resize(n1);
  for (std::size_t s = 0; s < n1; ++s) {
    report.starts[s].start_index = static_cast<int>(s);
    report.starts[s].iterations = runs[s]->iterations();
    report.starts[s].loglik_trace = runs[s]->trace();
  }
  for (std::size_t s : order) {
    report.starts[s].survived = true;
    report.survivors.push_back(static_cast<int>(s));
  }
  report.winner = static_cast<int>(order.front());
  const GmmRun& best = *runs[order.front()];
  return GmmFitResult{best.params(), best.rho(), std::move(report), best.loglik()};
}

bool spectral_gap_check(std::span<const SymMatrix> covs) {
  check_covs(covs);
  const std::size_t k = covs.size();
  const std::size_t d = covs.front().dim();
  std::vector<double> lead(k);
  double tail_sum = 0.0;
  for (std::size_t c = 0; c < k; ++c) {
    lead[c] = leading_eigenpair(covs[c]).value;
    tail_sum += covs[c].trace() - lead[c];
  }
  const double rhs = tail_sum / (static_cast<double>(k) * static_cast<double>(d - 1));
  const double slack = 1e-12 * std::max(1.0, std::abs(rhs));
  return std::all_of(lead.begin(), lead.end(), [&](double l) { return l >= rhs - slack; });
}

ExtractedSpikes extract_spikes(std::span<const SymMatrix> covs) {
  check_covs(covs);
  const std::size_t k = covs.size();
  const std::size_t d = covs.front().dim();
  std::vector<EigenPair> pairs;
  pairs.reserve(k);
  double tail = 0.0;
  for (const auto& c : covs) {
    pairs.push_back(leading_eigenpair(c));
    tail += (c.trace() - pairs.back().value) / static_cast<double>(d - 1);
  }

  ExtractedSpikes out;
  out.sigma_sq_gmm = tail / static_cast<double>(k);
  out.gap_ok = spectral_gap_check(covs);
  out.spikes_gmm.assign(k, std::vector<double>(d, 0.0));
  out.clamped.assign(k, false);
  for (std::size_t c = 0; c < k; ++c) {
    const double excess = pairs[c].value - out.sigma_sq_gmm;
    if (excess < 0.0) {
      out.clamped[c] = true;
      continue;
    }
    const double scale = std::sqrt(excess);
    for (std::size_t f = 0; f < d; ++f) out.spikes_gmm[c][f] = scale * pairs[c].vector[f];
  }
  return out;
}

KMeansResult kmeans_fit(const DataMatrix& y, std::size_t k, std::uint64_t seed) {
  const std::size_t n = y.count();
  const std::size_t d = y.dim();
  if (k < 1) throw ArgumentError("kmeans_fit: K must be at least 1");
  if (n < k) throw ArgumentError("kmeans_fit: N is smaller than K");
  Rng rng(seed);

  // k-means++ seeding.
  std::vector<std::size_t> chosen;
  chosen.push_back(static_cast<std::size_t>(rng.below(n)));
  std::vector<double> d2(n, std::numeric_limits<double>::infinity());
  while (chosen.size() < k) {
    const double* last = y.observation(chosen.back()).data();
    for (std::size_t i = 0; i < n; ++i) d2[i] = std::min(d2[i], kernels::sq_dist(y.observation(i).data(), last, d));
    const double total = std::accumulate(d2.begin(), d2.end(), 0.0);
    std::size_t next;
    if (total > 0.0) {
      next = rng.categorical(d2);
    } else {
      // Every remaining point coincides with a center; take the first unused index.
      next = 0;
      while (std::find(chosen.begin(), chosen.end(), next) != chosen.end()) ++next;
    }
    chosen.push_back(next);
  }

  KMeansResult out;
  out.centroids.resize(k);
  for (std::size_t c = 0; c < k; ++c) {
    const auto o = y.observation(chosen[c]);
    out.centroids[c].assign(o.begin(), o.end());
  }
  out.labels.assign(n, 0);
  std::vector<double> dist(n);
  constexpr int kMaxIter = 300;
  for (int iter = 0; iter < kMaxIter; ++iter) {
    bool changed = false;
    double inertia = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double* yi = y.observation(i).data();
      int best = 0;
      double best_d = kernels::sq_dist(yi, out.centroids[0].data(), d);
      for (std::size_t c = 1; c < k; ++c) {
        const double dc = kernels::sq_dist(yi, out.centroids[c].data(), d);
        if (dc < best_d) {
          best_d = dc;
          best = static_cast<int>(c);
        }
      }
      if (out.labels[i] != best + 1) changed = true;
      out.labels[i] = best + 1;
      dist[i] = best_d;
      inertia += best_d;
    }
    out.inertia_trace.push_back(inertia);
    out.iterations = iter + 1;
    if (!changed && iter > 0) break;

    std::vector<std::vector<double>> sums(k, std::vector<double>(d, 0.0));
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto c = static_cast<std::size_t>(out.labels[i] - 1);
      kernels::axpy(1.0, y.observation(i).data(), sums[c].data(), d);
      ++counts[c];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] == 0) {
        const auto far = static_cast<std::size_t>(std::max_element(dist.begin(), dist.end()) - dist.begin());
        const auto o = y.observation(far);
        out.centroids[c].assign(o.begin(), o.end());
        dist[far] = 0.0;
        continue;
      }
      for (std::size_t f = 0; f < d; ++f) out.centroids[c][f] = sums[c][f] / static_cast<double>(counts[c]);
    }
  }
  return out;
}

}  // namespace spikefit::baselines
