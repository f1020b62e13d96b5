#include "spikefit/smm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numbers>
#include <numeric>
#include <string>

#include "spikefit/errors.hpp"
#include "spikefit/kernels.hpp"
#include "spikefit/parallel.hpp"

namespace spikefit::smm {

namespace {

constexpr double kLn2Pi = 1.8378770664093454835606594728112;  // ln(2 pi)
constexpr double kFrozenGammaFraction = 1e-12;
// sigma^2 never drops below this fraction of ||Y||_F^2 / (dN); only reached
// on exactly low-rank data where the closed form gives 0.
constexpr double kNoiseFloorFraction = 1e-12;

double noise_floor(double y_frob_sq, std::size_t d, std::size_t n) {
  const double f = kNoiseFloorFraction * y_frob_sq / (static_cast<double>(d) * static_cast<double>(n));
  return f > 0.0 ? f : std::numeric_limits<double>::min();
}

void check_dims(const DataMatrix& y, const ModelParams& theta) {
  theta.validate();
  if (theta.dim() != y.dim()) {
    throw ArgumentError("dimension mismatch: data has d=" + std::to_string(y.dim()) +
                        ", spikes have d=" + std::to_string(theta.dim()));
  }
}

// Per-component quantities shared by all rows.
struct ComponentTerms {
  std::vector<double> log_weight;  // ln pi_k (-inf when pi_k = 0)
  std::vector<double> denom;       // ||x_k||^2 + sigma^2
  std::vector<double> log_denom;   // ln(||x_k||^2 + sigma^2)
};

ComponentTerms component_terms(const ModelParams& theta) {
  ComponentTerms t;
  const std::size_t k = theta.components();
  const std::size_t d = theta.dim();
  t.log_weight.resize(k);
  t.denom.resize(k);
  t.log_denom.resize(k);
  for (std::size_t c = 0; c < k; ++c) {
    t.log_weight[c] = theta.weights[c] > 0.0 ? std::log(theta.weights[c])
                                             : -std::numeric_limits<double>::infinity();
    t.denom[c] = kernels::sq_norm(theta.spikes[c].data(), d) + theta.noise_var;
    t.log_denom[c] = std::log(t.denom[c]);
  }
  return t;
}

double sum_over(const SupportSet& s, const std::vector<double>& values) {
  double total = 0.0;
  for (std::size_t k : s) total += values[k];
  return total;
}

void check_members(const SupportSet& s, const MStepSummary& summary) {
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] >= summary.components()) throw ArgumentError("support set member out of range");
    if (i > 0 && s[i] <= s[i - 1]) throw ArgumentError("support set must be sorted and unique");
  }
}

}  // namespace

void ModelParams::validate() const {
  const std::size_t k = spikes.size();
  if (k == 0) throw ArgumentError("ModelParams: need at least one component");
  if (weights.size() != k) throw ArgumentError("ModelParams: weights and spikes differ in count");
  const std::size_t d = spikes.front().size();
  if (d == 0) throw ArgumentError("ModelParams: empty spike");
  double total = 0.0;
  for (std::size_t c = 0; c < k; ++c) {
    if (spikes[c].size() != d) throw ArgumentError("ModelParams: spikes differ in dimension");
    for (double v : spikes[c]) {
      if (!std::isfinite(v)) throw ArgumentError("ModelParams: non-finite spike entry");
    }
    if (!(weights[c] >= 0.0 && weights[c] <= 1.0)) {
      throw ArgumentError("ModelParams: weight outside [0, 1]");
    }
    total += weights[c];
  }
  if (std::abs(total - 1.0) > 1e-12 * static_cast<double>(std::max<std::size_t>(k, 1)) + 1e-12) {
    throw ArgumentError("ModelParams: weights do not sum to 1");
  }
  if (!(noise_var > 0.0) || !std::isfinite(noise_var)) {
    throw ArgumentError("ModelParams: noise variance must be positive");
  }
}

Responsibilities::Responsibilities(std::size_t n, std::size_t k, std::vector<double> rho)
    : n_(n), k_(k), rho_(std::move(rho)) {
  if (rho_.size() != n_ * k_) throw ArgumentError("Responsibilities: wrong entry count");
}

std::vector<double> Responsibilities::column(std::size_t k) const {
  std::vector<double> out(n_);
  for (std::size_t i = 0; i < n_; ++i) out[i] = rho_[i * k_ + k];
  return out;
}

bool MStepSummary::admissible(std::size_t k) const {
  return gammas[k] >= kFrozenGammaFraction * static_cast<double>(n) && gammas[k] > 0.0 &&
         lambdas[k] > 0.0;
}

void FitConfig::validate() const {
  if (k < 1) throw ArgumentError("FitConfig: K must be at least 1");
  if (!(conv_threshold > 0.0)) throw ArgumentError("FitConfig: convergence threshold must be positive");
  if (sieve.n1 < 1 || sieve.n2 < 1) throw ArgumentError("FitConfig: need at least one start");
  if (sieve.n2 > sieve.n1) throw ArgumentError("FitConfig: n2 must not exceed n1");
  if (sieve.d1 < 1 || sieve.d2 < 1) throw ArgumentError("FitConfig: d1 and d2 must be at least 1");
  if (!(approx_delta >= 0.0) || !std::isfinite(approx_delta)) {
    throw ArgumentError("FitConfig: approx_delta must be finite and non-negative");
  }
}

FitConfig FitConfig::synthetic_preset(std::size_t k) {
  FitConfig c;
  c.k = k;
  c.sieve = {10, 10, 5, 600};
  c.conv_threshold = 1e-8;
  return c;
}

FitConfig FitConfig::ims_preset(std::size_t k) {
  FitConfig c;
  c.k = k;
  c.sieve = {6, 6, 3, 60};
  c.conv_threshold = 1e-3;
  return c;
}

FitConfig FitConfig::hsi_preset(std::size_t k) {
  FitConfig c;
  c.k = k;
  c.sieve = {10, 10, 3, 120};
  c.conv_threshold = 1e-3;
  return c;
}

double conditional_log_density(std::span<const double> y, std::span<const double> x,
                               double sigma_sq) {
  if (!(sigma_sq > 0.0)) throw ArgumentError("conditional_log_density: sigma^2 must be positive");
  if (y.size() != x.size()) throw ArgumentError("conditional_log_density: dimension mismatch");
  const double d = static_cast<double>(y.size());
  const double yy = kernels::sq_norm(y.data(), y.size());
  const double yx = kernels::dot(y.data(), x.data(), y.size());
  const double denom = kernels::sq_norm(x.data(), x.size()) + sigma_sq;
  return -0.5 * d * kLn2Pi - (yy - yx * yx / denom) / (2.0 * sigma_sq) - 0.5 * std::log(denom) -
         0.5 * (d - 1.0) * std::log(sigma_sq);
}

double log_likelihood(const DataMatrix& y, const ModelParams& theta) {
  check_dims(y, theta);
  const std::size_t k = theta.components();
  std::vector<double> terms(k);
  double total = 0.0;
  for (std::size_t i = 0; i < y.count(); ++i) {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < k; ++c) {
      terms[c] = theta.weights[c] > 0.0
                     ? std::log(theta.weights[c]) +
                           conditional_log_density(y.observation(i), theta.spikes[c], theta.noise_var)
                     : -std::numeric_limits<double>::infinity();
      best = std::max(best, terms[c]);
    }
    if (!std::isfinite(best)) throw NumericError("log_likelihood: every component has zero weight");
    double sum = 0.0;
    for (double t : terms) sum += std::exp(t - best);
    total += best + std::log(sum);
  }
  return total;
}

EStepResult e_step_with_loglik(const DataMatrix& y, const ModelParams& theta) {
  check_dims(y, theta);
  const std::size_t n = y.count();
  const std::size_t d = y.dim();
  const std::size_t k = theta.components();
  const double sigma_sq = theta.noise_var;
  const ComponentTerms ct = component_terms(theta);
  // Terms shared by every component, restored for the log-likelihood only.
  const double row_const = -0.5 * static_cast<double>(d) * kLn2Pi -
                           0.5 * static_cast<double>(d - 1) * std::log(sigma_sq);

  Responsibilities rho(n, k);
  std::vector<double> logits(k);
  double loglik = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double* yi = y.observation(i).data();
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < k; ++c) {
      const double proj = kernels::dot(yi, theta.spikes[c].data(), d);
      logits[c] = ct.log_weight[c] + proj * proj / (2.0 * sigma_sq * ct.denom[c]) - 0.5 * ct.log_denom[c];
      best = std::max(best, logits[c]);
    }
    if (!std::isfinite(best)) throw NumericError("e_step: every component has zero weight");
    double sum = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
      logits[c] = std::exp(logits[c] - best);
      sum += logits[c];
    }
    for (std::size_t c = 0; c < k; ++c) rho(i, c) = logits[c] / sum;
    const double yy = kernels::sq_norm(yi, d);
    loglik += best + std::log(sum) + row_const - yy / (2.0 * sigma_sq);
  }
  return {std::move(rho), loglik};
}

Responsibilities e_step(const DataMatrix& y, const ModelParams& theta) {
  return e_step_with_loglik(y, theta).rho;
}

double sigma_sq_of_set(const SupportSet& s, const MStepSummary& summary) {
  check_members(s, summary);
  const double dn = static_cast<double>(summary.d) * static_cast<double>(summary.n);
  const double denom = dn - sum_over(s, summary.gammas);
  if (!(denom > 0.0)) throw NumericError("sigma_sq_of_set: dN - sum gamma must be positive");
  return (summary.y_frob_sq - sum_over(s, summary.lambdas)) / denom;
}

double g_objective(const SupportSet& s, const MStepSummary& summary) {
  const double sigma_sq = sigma_sq_of_set(s, summary);
  if (!(sigma_sq > 0.0)) throw NumericError("g_objective: sigma^2(S) is not positive");
  const double dn = static_cast<double>(summary.d) * static_cast<double>(summary.n);
  double g = (dn - sum_over(s, summary.gammas)) * std::log(sigma_sq);
  for (std::size_t k : s) {
    const double gamma = summary.gammas[k];
    const double lambda = summary.lambdas[k];
    if (!(gamma > 0.0) || !(lambda > 0.0)) {
      throw NumericError("g_objective: member " + std::to_string(k + 1) + " has zero gamma or lambda");
    }
    g += gamma * std::log(lambda / gamma);
  }
  return g;
}

bool is_valid(const SupportSet& s, const MStepSummary& summary) {
  check_members(s, summary);
  for (std::size_t k : s) {
    if (!summary.admissible(k)) return false;
  }
  const double sigma_sq = sigma_sq_of_set(s, summary);
  for (std::size_t k : s) {
    if (!(sigma_sq <= summary.lambdas[k] / summary.gammas[k])) return false;
  }
  return true;
}

bool is_saturated(const SupportSet& s, const MStepSummary& summary) {
  if (!is_valid(s, summary)) return false;
  const double sigma_sq = sigma_sq_of_set(s, summary);
  for (std::size_t j = 0; j < summary.components(); ++j) {
    if (std::binary_search(s.begin(), s.end(), j) || !summary.admissible(j)) continue;
    if (!(sigma_sq > summary.lambdas[j] / summary.gammas[j])) return false;
  }
  return true;
}

SupportSet greedy_set_opt(const MStepSummary& summary) {
  const std::size_t k = summary.components();
  const double dn = static_cast<double>(summary.d) * static_cast<double>(summary.n);
  std::vector<bool> member(k, false);
  double lambda_sum = 0.0;
  double gamma_sum = 0.0;
  for (std::size_t round = 0; round < k; ++round) {
    const double sigma_sq = (summary.y_frob_sq - lambda_sum) / (dn - gamma_sum);
    std::size_t pick = k;
    double pick_ratio = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      if (member[j] || !summary.admissible(j)) continue;
      const double ratio = summary.lambdas[j] / summary.gammas[j];
      if (sigma_sq <= ratio && (pick == k || ratio > pick_ratio)) {
        pick = j;
        pick_ratio = ratio;
      }
    }
    if (pick == k) break;
    member[pick] = true;
    lambda_sum += summary.lambdas[pick];
    gamma_sum += summary.gammas[pick];
  }
  SupportSet s;
  for (std::size_t j = 0; j < k; ++j) {
    if (member[j]) s.push_back(j);
  }
  return s;
}

SupportSet brute_force_set_opt(const MStepSummary& summary) {
  const std::size_t k = summary.components();
  if (k > 20) throw ArgumentError("brute_force_set_opt: K = " + std::to_string(k) + " exceeds 20");
  SupportSet best;
  double best_g = std::numeric_limits<double>::infinity();
  bool have_best = false;
  for (std::uint32_t mask = 0; mask < (1u << k); ++mask) {
    SupportSet s;
    for (std::size_t j = 0; j < k; ++j) {
      if (mask & (1u << j)) s.push_back(j);
    }
    if (!is_valid(s, summary)) continue;
    const double g = g_objective(s, summary);
    bool better = !have_best || g < best_g;
    if (have_best && g == best_g) {
      better = s.size() < best.size() || (s.size() == best.size() && s < best);
    }
    if (better) {
      best = std::move(s);
      best_g = g;
      have_best = true;
    }
  }
  return best;
}

MStepResult m_step(const DataMatrix& y, const Responsibilities& rho, double approx_delta) {
  const std::size_t n = y.count();
  const std::size_t d = y.dim();
  const std::size_t k = rho.components();
  if (rho.rows() != n) throw ArgumentError("m_step: responsibilities and data differ in N");
  if (k < 1) throw ArgumentError("m_step: need at least one component");

  MStepResult out;
  MStepSummary& sum = out.summary;
  sum.d = d;
  sum.n = n;
  sum.y_frob_sq = y.frobenius_sq();
  sum.gammas.assign(k, 0.0);
  sum.lambdas.assign(k, 0.0);
  sum.eigvecs.assign(k, std::vector<double>(d, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < k; ++c) sum.gammas[c] += rho(i, c);
  }

  out.params.weights.resize(k);
  for (std::size_t c = 0; c < k; ++c) {
    out.params.weights[c] = std::min(1.0, sum.gammas[c] / static_cast<double>(n));
    if (sum.gammas[c] < kFrozenGammaFraction * static_cast<double>(n)) continue;
    const std::vector<double> w = rho.column(c);
    const SymMatrix a = thresholded_scatter(y, w, approx_delta);
    EigenPair ep = leading_eigenpair(a);
    sum.lambdas[c] = ep.value;
    sum.eigvecs[c] = std::move(ep.vector);
  }

  const SupportSet best = greedy_set_opt(sum);
  out.raw_noise_var = sigma_sq_of_set(best, sum);
  const double sigma_sq = std::max(out.raw_noise_var, noise_floor(sum.y_frob_sq, d, n));
  out.params.noise_var = sigma_sq;
  out.params.spikes.assign(k, std::vector<double>(d, 0.0));
  for (std::size_t c : best) {
    const double norm_sq = sum.lambdas[c] / sum.gammas[c] - sigma_sq;
    if (!(norm_sq > 0.0)) continue;  // boundary: identical density with x = 0
    const double scale = std::sqrt(norm_sq);
    for (std::size_t f = 0; f < d; ++f) out.params.spikes[c][f] = scale * sum.eigvecs[c][f];
    out.support.push_back(c);
  }
  return out;
}

double q_function(const DataMatrix& y, const Responsibilities& rho, const ModelParams& theta) {
  check_dims(y, theta);
  if (rho.rows() != y.count() || rho.components() != theta.components()) {
    throw ArgumentError("q_function: shape mismatch");
  }
  double q = 0.0;
  for (std::size_t i = 0; i < y.count(); ++i) {
    for (std::size_t c = 0; c < theta.components(); ++c) {
      const double r = rho(i, c);
      if (r == 0.0) continue;
      q += r * (std::log(theta.weights[c]) +
                conditional_log_density(y.observation(i), theta.spikes[c], theta.noise_var));
    }
  }
  return q;
}

ModelParams random_init(const DataMatrix& y, std::size_t k, Rng& rng) {
  const std::size_t d = y.dim();
  const double per_coord = y.frobenius_sq() / (static_cast<double>(d) * static_cast<double>(y.count()));
  ModelParams theta;
  theta.noise_var = 0.5 * per_coord;
  if (!(theta.noise_var > 0.0)) theta.noise_var = 1.0;
  const double scale = std::sqrt(std::max(per_coord - theta.noise_var, 1e-12 * theta.noise_var));
  theta.weights.assign(k, 1.0 / static_cast<double>(k));
  theta.spikes.resize(k);
  for (auto& x : theta.spikes) {
    x.resize(d);
    double norm_sq = 0.0;
    do {
      for (double& v : x) v = rng.normal();
      norm_sq = kernels::sq_norm(x.data(), d);
    } while (!(norm_sq > 0.0));
    const double f = scale / std::sqrt(norm_sq);
    for (double& v : x) v *= f;
  }
  // 1/K does not always sum to exactly 1; fold the rounding into the last weight.
  double head = 0.0;
  for (std::size_t c = 0; c + 1 < k; ++c) head += theta.weights[c];
  theta.weights[k - 1] = 1.0 - head;
  return theta;
}

EmRun::EmRun(const DataMatrix& y, ModelParams init, double approx_delta)
    : y_(&y), approx_delta_(approx_delta), params_(std::move(init)), estep_(e_step_with_loglik(y, params_)) {
  trace_.push_back(estep_.loglik);
}

void EmRun::step() {
  MStepResult m = m_step(*y_, estep_.rho, approx_delta_);
  params_ = std::move(m.params);
  estep_ = e_step_with_loglik(*y_, params_);
  trace_.push_back(estep_.loglik);
  supports_.push_back(std::move(m.support));
  raw_noise_vars_.push_back(m.raw_noise_var);
}

FitResult fit(const DataMatrix& y, const FitConfig& config) {
  config.validate();
  if (y.count() < config.k) {
    throw ArgumentError("fit: N = " + std::to_string(y.count()) + " is smaller than K = " +
                        std::to_string(config.k));
  }
  const auto n1 = static_cast<std::size_t>(config.sieve.n1);
  const auto n2 = static_cast<std::size_t>(config.sieve.n2);
  const Rng master(config.rng_seed);

  std::vector<std::unique_ptr<EmRun>> runs(n1);
  parallel_for(n1, config.jobs, [&](std::size_t s) {
    Rng rng = master.split(s);
    runs[s] = std::make_unique<EmRun>(y, random_init(y, config.k, rng), config.approx_delta);
    for (int t = 0; t < config.sieve.d1; ++t) runs[s]->step();
  });

  auto score = [&](std::size_t s) {
    const double ll = runs[s]->loglik();
    return std::isnan(ll) ? -std::numeric_limits<double>::infinity() : ll;
  };
  std::vector<std::size_t> order(n1);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return score(a) > score(b); });
  order.resize(n2);

  parallel_for(n2, config.jobs, [&](std::size_t slot) {
    EmRun& run = *runs[order[slot]];
    for (int t = 0; t < config.sieve.d2; ++t) {
      const double before = run.loglik();
      run.step();
      if (run.loglik() - before < config.conv_threshold) break;
    }
  });

  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return score(a) > score(b); });

  FitReport report;
  report.starts.resize(n1);
  for (std::size_t s = 0; s < n1; ++s) {
    StartRecord& rec = report.starts[s];
    rec.start_index = static_cast<int>(s);
    rec.iterations = runs[s]->iterations();
    rec.loglik_trace = runs[s]->trace();
    rec.support_history = runs[s]->supports();
    rec.noise_var_history = runs[s]->raw_noise_vars();
  }
  for (std::size_t s : order) {
    report.starts[s].survived = true;
    report.survivors.push_back(static_cast<int>(s));
  }
  report.winner = static_cast<int>(order.front());

  EmRun& best = *runs[order.front()];
  return FitResult{best.params(), best.rho(), std::move(report), best.loglik()};
}

std::vector<int> assign_clusters(const Responsibilities& rho) {
  std::vector<int> labels(rho.rows());
  for (std::size_t i = 0; i < rho.rows(); ++i) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < rho.components(); ++c) {
      if (rho(i, c) > rho(i, best)) best = c;
    }
    labels[i] = static_cast<int>(best) + 1;
  }
  return labels;
}

}  // namespace spikefit::smm
