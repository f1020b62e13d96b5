#pragma once

// Spiked mixture model: y = alpha * x_z + eps with z ~ Categorical(pi),
// alpha ~ N(0, 1), eps ~ N(0, sigma^2 I), so y | z ~ N(0, x_z x_z^T + sigma^2 I).
// This header holds the density, the EM steps, the support-set optimizer of the
// M-step and the sieved multi-start fit.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "spikefit/linalg.hpp"
#include "spikefit/rng.hpp"

namespace spikefit::smm {

struct ModelParams {
  std::vector<std::vector<double>> spikes;  // K x d, zero vectors allowed
  std::vector<double> weights;              // pi_k, on the simplex
  double noise_var = 1.0;                   // sigma^2 > 0

  std::size_t components() const noexcept { return spikes.size(); }
  std::size_t dim() const noexcept { return spikes.empty() ? 0 : spikes.front().size(); }

  // Throws ArgumentError when an invariant is violated.
  void validate() const;
};

// Row-stochastic N x K posterior matrix, row-major.
class Responsibilities {
 public:
  Responsibilities(std::size_t n, std::size_t k) : n_(n), k_(k), rho_(n * k, 0.0) {}
  Responsibilities(std::size_t n, std::size_t k, std::vector<double> rho);

  std::size_t rows() const noexcept { return n_; }
  std::size_t components() const noexcept { return k_; }
  double operator()(std::size_t i, std::size_t k) const { return rho_[i * k_ + k]; }
  double& operator()(std::size_t i, std::size_t k) { return rho_[i * k_ + k]; }
  std::span<const double> row(std::size_t i) const { return {rho_.data() + i * k_, k_}; }
  std::span<const double> values() const noexcept { return rho_; }

  // Column k as a contiguous vector.
  std::vector<double> column(std::size_t k) const;

 private:
  std::size_t n_;
  std::size_t k_;
  std::vector<double> rho_;
};

// Everything the support-set search needs from one M-step.
struct MStepSummary {
  std::vector<double> gammas;                // gamma_e = sum_i rho_e^[i]
  std::vector<double> lambdas;               // lambda_1(A_e)
  std::vector<std::vector<double>> eigvecs;  // v_1(A_e); zero for frozen components
  double y_frob_sq = 0.0;                    // ||Y||_F^2
  std::size_t d = 0;
  std::size_t n = 0;

  std::size_t components() const noexcept { return gammas.size(); }
  // A component with gamma below 1e-12 * N is frozen: it can never enter S.
  bool admissible(std::size_t k) const;
};

// Sorted 0-based member indices.
using SupportSet = std::vector<std::size_t>;

struct Sieve {
  int n1 = 10;   // random starts
  int d1 = 10;   // pre-sieving iterations per start
  int n2 = 5;    // survivors
  int d2 = 600;  // post-sieving iteration cap per survivor
};

struct FitConfig {
  std::size_t k = 3;
  double conv_threshold = 1e-8;  // absolute log-likelihood gain
  Sieve sieve;
  double approx_delta = 0.0;  // 0 = exact scatter matrices
  std::uint64_t rng_seed = 0;
  unsigned jobs = 1;  // threads across starts; results do not depend on it

  void validate() const;

  // Sieving schedules for the three reference workloads.
  static FitConfig synthetic_preset(std::size_t k);  // 10, 10, 5, 600, 1e-8
  static FitConfig ims_preset(std::size_t k);        // 6, 6, 3, 60, 1e-3
  static FitConfig hsi_preset(std::size_t k);        // 10, 10, 3, 120, 1e-3
};

struct StartRecord {
  int start_index = 0;
  bool survived = false;  // selected by the sieve
  int iterations = 0;     // EM iterations performed
  std::vector<double> loglik_trace;  // log-likelihood of the initial and every later state
  std::vector<SupportSet> support_history;  // S chosen at every M-step
  std::vector<double> noise_var_history;    // sigma^2(S) at every M-step, before the floor
};

struct FitReport {
  std::vector<StartRecord> starts;  // indexed by start
  std::vector<int> survivors;       // start indices kept by the sieve, best first
  int winner = 0;
};

struct FitResult {
  ModelParams params;
  Responsibilities rho;
  FitReport report;
  double loglik = 0.0;
};

// ln p(y | z) for y ~ N(0, x x^T + sigma^2 I), via Sylvester and Sherman-Morrison.
double conditional_log_density(std::span<const double> y, std::span<const double> x,
                               double sigma_sq);

// Full log-likelihood including all constants, log-sum-exp stabilized.
double log_likelihood(const DataMatrix& y, const ModelParams& theta);

Responsibilities e_step(const DataMatrix& y, const ModelParams& theta);

struct EStepResult {
  Responsibilities rho;
  double loglik;
};
// E-step that also returns the log-likelihood of theta, sharing the per-row work.
EStepResult e_step_with_loglik(const DataMatrix& y, const ModelParams& theta);

double sigma_sq_of_set(const SupportSet& s, const MStepSummary& summary);
double g_objective(const SupportSet& s, const MStepSummary& summary);
bool is_valid(const SupportSet& s, const MStepSummary& summary);
// Valid, and sigma^2(S) > lambda_j / gamma_j for every admissible j outside S.
bool is_saturated(const SupportSet& s, const MStepSummary& summary);

// O(K^2) augmentation to the unique saturated set, which minimizes g over the
// valid sets. Adds the candidate with the largest lambda/gamma each round.
SupportSet greedy_set_opt(const MStepSummary& summary);

// Exhaustive minimization of g over all valid subsets (K <= 20). Ties go to
// the smaller set, then to the lexicographically smaller member list.
SupportSet brute_force_set_opt(const MStepSummary& summary);

struct MStepResult {
  ModelParams params;
  MStepSummary summary;
  SupportSet support;  // members with a nonzero spike
  double raw_noise_var = 0.0;  // sigma^2(S) before the positivity floor
};

MStepResult m_step(const DataMatrix& y, const Responsibilities& rho, double approx_delta = 0.0);

// Expected complete-data log-likelihood sum_i sum_k rho_ik [ln pi_k + ln p(y_i | k)].
double q_function(const DataMatrix& y, const Responsibilities& rho, const ModelParams& theta);

// Random starting point: unit directions scaled by sqrt(max(F/(dN) - s0, eps)),
// uniform weights, s0 = F/(2dN) as the noise variance.
ModelParams random_init(const DataMatrix& y, std::size_t k, Rng& rng);

// One EM trajectory. Holds the current parameters and their E-step.
class EmRun {
 public:
  EmRun(const DataMatrix& y, ModelParams init, double approx_delta);

  // One M-step followed by the E-step of the new parameters.
  void step();

  const ModelParams& params() const noexcept { return params_; }
  const Responsibilities& rho() const noexcept { return estep_.rho; }
  double loglik() const noexcept { return estep_.loglik; }
  const std::vector<double>& trace() const noexcept { return trace_; }
  const std::vector<SupportSet>& supports() const noexcept { return supports_; }
  const std::vector<double>& raw_noise_vars() const noexcept { return raw_noise_vars_; }
  int iterations() const noexcept { return static_cast<int>(supports_.size()); }

 private:
  const DataMatrix* y_;
  double approx_delta_;
  ModelParams params_;
  EStepResult estep_;
  std::vector<double> trace_;
  std::vector<SupportSet> supports_;
  std::vector<double> raw_noise_vars_;
};

FitResult fit(const DataMatrix& y, const FitConfig& config);

// 1-based argmax labels; ties go to the smallest component index.
std::vector<int> assign_clusters(const Responsibilities& rho);

}  // namespace spikefit::smm
