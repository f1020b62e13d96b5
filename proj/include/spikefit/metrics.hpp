#pragma once

// Distances between spikes and spike sets, and the two recovery experiments
// that compare the spiked mixture fit against GMM-based extraction.

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "spikefit/baselines.hpp"
#include "spikefit/smm.hpp"
#include "spikefit/synthetic.hpp"

namespace spikefit::metrics {

using SpikeSet = std::vector<std::vector<double>>;

enum class Metric { sqe, abs_cos };
const char* metric_name(Metric m) noexcept;

// ||x - x_hat||^2
double d_sqe(std::span<const double> x, std::span<const double> x_hat);
// 1 - |x . x_hat| / (||x|| ||x_hat||); throws ArgumentError on a zero vector.
double d_abs_cos(std::span<const double> x, std::span<const double> x_hat);
double distance(Metric m, std::span<const double> x, std::span<const double> x_hat);

// max(max_x min_xh d(x, xh), max_xh min_x d(x, xh)). With sign_invariant the
// base distance becomes min(d(x, xh), d(x, -xh)), i.e. both sets are compared
// up to the sign of each member.
double hausdorff(const SpikeSet& x, const SpikeSet& x_hat, Metric m, bool sign_invariant = false);

// Largest value of 1 - d_abs_cos over distinct pairs, reported as the smallest
// pairwise d_abs_cos. Zero spikes are skipped; fewer than two nonzero spikes
// gives 0.
double min_pairwise_abs_cos(const SpikeSet& spikes);

// Nonzero members only.
SpikeSet nonzero_members(const SpikeSet& s);

struct BiasRow {
  double level = 0.0;
  std::string method;  // "smm" or "gmm"
  int replicates = 0;  // successful fits
  int failures = 0;
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation, 0 with a single replicate
  double min = 0.0;
  double max = 0.0;
  double bias = 0.0;  // mean - level
};

struct BiasOptions {
  std::vector<double> levels;
  int replicates = 10;
  std::size_t n = 1500;
  std::size_t d = 5;
  std::size_t k = 3;
  double spike_scale = synthetic::kBiasSpikeScale;
  smm::FitConfig config;  // config.k is overwritten by k; rng_seed is the master seed
  baselines::GmmOptions gmm;
};

// Ten levels spaced evenly over [1, 30].
std::vector<double> default_bias_levels();

// Each (level, replicate) draws fresh spikes and weights and a fresh dataset,
// then fits both methods. Rows come in (level, method) order with smm first.
std::vector<BiasRow> bias_experiment(const BiasOptions& options);

struct HausdorffRow {
  int iteration = 0;
  double smm_sqe = 0.0;
  double smm_abs_cos = 0.0;
  double gmm_sqe = 0.0;
  double gmm_abs_cos = 0.0;
};

struct HausdorffOptions {
  std::size_t n = 1500;
  int inits = 100;
  int max_iter = 200;  // rows 0..max_iter
  double conv_threshold = 1e-8;
  std::uint64_t data_seed = 0;
  std::uint64_t init_seed = 0;
  unsigned jobs = 1;
  bool sign_invariant = false;
  bool truth_init = false;  // start every run at the ground truth
  baselines::GmmOptions gmm;
};

// Average Hausdorff distance to the true spikes after every EM iteration.
// A run that has converged keeps contributing its final value. For the cosine
// metric zero estimates are dropped; a run with no nonzero estimate scores 1.
std::vector<HausdorffRow> hausdorff_experiment(const synthetic::GroundTruth& truth,
                                               const HausdorffOptions& options);

// Fraction of observations whose label agrees with the reference after the
// best one-to-one relabeling of `labels`. Labels are 1-based; exhaustive over
// permutations for up to 8 labels, greedy on the contingency table beyond.
double label_purity(const std::vector<int>& labels, const std::vector<int>& reference);

struct Comparison {
  SpikeSet truth;
  SpikeSet smm;
  SpikeSet gmm;
  double smm_noise_var = 0.0;
  double gmm_noise_var = 0.0;
  bool gap_ok = true;
  double smm_hausdorff_abs_cos = 0.0;
  double gmm_hausdorff_abs_cos = 0.0;
  double smm_hausdorff_sqe = 0.0;  // sign invariant
  double gmm_hausdorff_sqe = 0.0;  // sign invariant
  double smm_min_pairwise_abs_cos = 0.0;
  double gmm_min_pairwise_abs_cos = 0.0;
};

// Draws N observations from the truth, fits both methods with the same
// config and scores both against the truth.
Comparison compare_methods(const synthetic::GroundTruth& truth, std::size_t n, std::uint64_t data_seed,
                           const smm::FitConfig& config, const baselines::GmmOptions& gmm = {});

void write_bias_csv(std::ostream& out, const std::vector<BiasRow>& rows);
void write_hausdorff_csv(std::ostream& out, const std::vector<HausdorffRow>& rows);

// Shortest round-trip decimal representation.
std::string format_double(double v);

}  // namespace spikefit::metrics
