#pragma once

// Comparison methods: a full-covariance GMM fitted by EM, closed-form spike
// extraction from its covariances, and k-means.

#include <cstdint>
#include <span>
#include <vector>

#include "spikefit/linalg.hpp"
#include "spikefit/rng.hpp"
#include "spikefit/smm.hpp"

namespace spikefit::baselines {

struct GmmParams {
  std::vector<std::vector<double>> means;
  std::vector<SymMatrix> covs;
  std::vector<double> weights;

  std::size_t components() const noexcept { return weights.size(); }
  std::size_t dim() const noexcept { return means.empty() ? 0 : means.front().size(); }
  void validate() const;
};

struct GmmOptions {
  bool zero_mean = false;      // constrain every mean to 0
  // A covariance that fails to factor gets ridge * trace/d * I added; an
  // always-on ridge would make the M-step inexact.
  double ridge = 1e-9;
};

struct GmmEStep {
  smm::Responsibilities rho;
  double loglik;
};

// Throws ConvergenceError if a covariance is not positive definite.
GmmEStep gmm_e_step(const DataMatrix& y, const GmmParams& params);
double gmm_log_likelihood(const DataMatrix& y, const GmmParams& params);
GmmParams gmm_m_step(const DataMatrix& y, const smm::Responsibilities& rho, const GmmOptions& options);

// Starting point: K distinct random observations act as seeds; every
// observation is hard-assigned to its closest seed (Euclidean, or |cosine|
// when means are pinned to 0) and one M-step turns that into parameters.
GmmParams gmm_random_init(const DataMatrix& y, std::size_t k, const GmmOptions& options, Rng& rng);

class GmmRun {
 public:
  GmmRun(const DataMatrix& y, GmmParams init, GmmOptions options);
  void step();

  const GmmParams& params() const noexcept { return params_; }
  const smm::Responsibilities& rho() const noexcept { return estep_.rho; }
  double loglik() const noexcept { return estep_.loglik; }
  const std::vector<double>& trace() const noexcept { return trace_; }
  int iterations() const noexcept { return static_cast<int>(trace_.size()) - 1; }

 private:
  const DataMatrix* y_;
  GmmOptions options_;
  GmmParams params_;
  GmmEStep estep_;
  std::vector<double> trace_;
};

struct GmmFitResult {
  GmmParams params;
  smm::Responsibilities rho;
  smm::FitReport report;  // support histories stay empty
  double loglik = 0.0;
};

// Same sieving schedule and seeding discipline as smm::fit. Requires N > K*d.
GmmFitResult gmm_fit(const DataMatrix& y, const smm::FitConfig& config, const GmmOptions& options = {});

// lambda_1(S_j) >= sum_k sum_{i>=2} lambda_i(S_k) / (K (d-1)) for every j,
// with a relative slack of 1e-12 for rounding at the boundary.
bool spectral_gap_check(std::span<const SymMatrix> covs);

struct ExtractedSpikes {
  double sigma_sq_gmm = 0.0;
  std::vector<std::vector<double>> spikes_gmm;
  bool gap_ok = true;
  std::vector<bool> clamped;  // lambda_1 < sigma^2_GMM, spike set to 0
};

// Closed-form minimizer of sum_k ||S_k - (x_k x_k^T + s^2 I)||_F^2.
ExtractedSpikes extract_spikes(std::span<const SymMatrix> covs);

struct KMeansResult {
  std::vector<std::vector<double>> centroids;
  std::vector<int> labels;            // 1-based
  std::vector<double> inertia_trace;  // after every assignment step
  int iterations = 0;
};

// k-means++ seeding, then Lloyd iterations until the assignment is a fixpoint
// or 300 iterations. An empty cluster takes the observation farthest from its
// own centroid.
KMeansResult kmeans_fit(const DataMatrix& y, std::size_t k, std::uint64_t seed);

}  // namespace spikefit::baselines
