#include "spikefit/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <optional>
#include <ostream>

#include "spikefit/errors.hpp"
#include "spikefit/kernels.hpp"
#include "spikefit/parallel.hpp"
#include "spikefit/rng.hpp"

namespace spikefit::metrics {

namespace {

void check_same_dim(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ArgumentError("spikes differ in dimension");
}

bool is_zero(const std::vector<double>& v) {
  return std::all_of(v.begin(), v.end(), [](double c) { return c == 0.0; });
}

double pair_distance(Metric m, std::span<const double> x, std::span<const double> xh, bool sign_invariant) {
  const double direct = distance(m, x, xh);
  if (!sign_invariant || m == Metric::abs_cos) return direct;
  std::vector<double> flipped(xh.begin(), xh.end());
  for (double& v : flipped) v = -v;
  return std::min(direct, distance(m, x, flipped));
}

// Hausdorff distance for an experiment step; see hausdorff_experiment.
double scored_distance(const SpikeSet& truth, const SpikeSet& est, Metric m, bool sign_invariant) {
  if (m == Metric::sqe) return hausdorff(truth, est, m, sign_invariant);
  SpikeSet nz = nonzero_members(est);
  if (nz.empty()) return 1.0;
  return hausdorff(truth, nz, m, sign_invariant);
}

baselines::GmmParams gmm_from_truth(const smm::ModelParams& th) {
  baselines::GmmParams p;
  p.weights = th.weights;
  for (const auto& x : th.spikes) {
    p.means.emplace_back(x.size(), 0.0);
    p.covs.push_back(SymMatrix::rank_one_plus_identity(x, 1.0, th.noise_var));
  }
  return p;
}

}  // namespace

const char* metric_name(Metric m) noexcept {
  return m == Metric::sqe ? "sqe" : "abs_cos";
}

double d_sqe(std::span<const double> x, std::span<const double> x_hat) {
  check_same_dim(x, x_hat);
  return kernels::sq_dist(x.data(), x_hat.data(), x.size());
}

double d_abs_cos(std::span<const double> x, std::span<const double> x_hat) {
  check_same_dim(x, x_hat);
  const double nx = kernels::sq_norm(x.data(), x.size());
  const double nh = kernels::sq_norm(x_hat.data(), x_hat.size());
  if (nx == 0.0 || nh == 0.0) throw ArgumentError("d_abs_cos: zero vector");
  const double c = std::abs(kernels::dot(x.data(), x_hat.data(), x.size())) / std::sqrt(nx * nh);
  return std::max(0.0, 1.0 - c);
}

double distance(Metric m, std::span<const double> x, std::span<const double> x_hat) {
  return m == Metric::sqe ? d_sqe(x, x_hat) : d_abs_cos(x, x_hat);
}

double hausdorff(const SpikeSet& x, const SpikeSet& x_hat, Metric m, bool sign_invariant) {
  if (x.empty() || x_hat.empty()) throw ArgumentError("hausdorff: empty spike set");
  std::vector<double> dist(x.size() * x_hat.size());
  for (std::size_t a = 0; a < x.size(); ++a) {
    for (std::size_t b = 0; b < x_hat.size(); ++b) {
      dist[a * x_hat.size() + b] = pair_distance(m, x[a], x_hat[b], sign_invariant);
    }
  }
  double result = 0.0;
  for (std::size_t a = 0; a < x.size(); ++a) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t b = 0; b < x_hat.size(); ++b) best = std::min(best, dist[a * x_hat.size() + b]);
    result = std::max(result, best);
  }
  for (std::size_t b = 0; b < x_hat.size(); ++b) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < x.size(); ++a) best = std::min(best, dist[a * x_hat.size() + b]);
    result = std::max(result, best);
  }
  return result;
}

SpikeSet nonzero_members(const SpikeSet& s) {
  SpikeSet out;
  for (const auto& v : s) {
    if (!is_zero(v)) out.push_back(v);
  }
  return out;
}

double min_pairwise_abs_cos(const SpikeSet& spikes) {
  const SpikeSet nz = nonzero_members(spikes);
  if (nz.size() < 2) return 0.0;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < nz.size(); ++a) {
    for (std::size_t b = a + 1; b < nz.size(); ++b) best = std::min(best, d_abs_cos(nz[a], nz[b]));
  }
  return best;
}

std::vector<double> default_bias_levels() {
  std::vector<double> levels(10);
  for (int i = 0; i < 10; ++i) levels[i] = 1.0 + 29.0 * static_cast<double>(i) / 9.0;
  return levels;
}

std::vector<BiasRow> bias_experiment(const BiasOptions& options) {
  if (options.levels.empty()) throw ArgumentError("bias_experiment: no noise levels");
  if (options.replicates < 1) throw ArgumentError("bias_experiment: replicates must be at least 1");
  smm::FitConfig config = options.config;
  config.k = options.k;
  config.validate();
  const std::uint64_t master = config.rng_seed;
  const unsigned jobs = config.jobs;
  config.jobs = 1;

  const std::size_t levels = options.levels.size();
  const auto reps = static_cast<std::size_t>(options.replicates);
  // Per cell: estimated noise variance or nullopt on failure.
  std::vector<std::optional<double>> smm_est(levels * reps);
  std::vector<std::optional<double>> gmm_est(levels * reps);

  parallel_for(levels * reps, jobs, [&](std::size_t cell) {
    const std::size_t li = cell / reps;
    const std::size_t r = cell % reps;
    const std::uint64_t cell_seed = mix_seed(master, li * 1000003ULL + r);
    const auto truth = synthetic::sample_ground_truth(options.k, options.d, options.levels[li],
                                                      options.spike_scale, mix_seed(cell_seed, 1));
    const auto data = synthetic::generate(truth, options.n, mix_seed(cell_seed, 2));
    smm::FitConfig cfg = config;
    cfg.rng_seed = mix_seed(cell_seed, 3);
    try {
      smm_est[cell] = smm::fit(data.y, cfg).params.noise_var;
    } catch (const std::exception&) {
    }
    try {
      const auto g = baselines::gmm_fit(data.y, cfg, options.gmm);
      gmm_est[cell] = baselines::extract_spikes(g.params.covs).sigma_sq_gmm;
    } catch (const std::exception&) {
    }
  });

  std::vector<BiasRow> rows;
  for (std::size_t li = 0; li < levels; ++li) {
    for (int method = 0; method < 2; ++method) {
      const auto& est = method == 0 ? smm_est : gmm_est;
      BiasRow row;
      row.level = options.levels[li];
      row.method = method == 0 ? "smm" : "gmm";
      std::vector<double> vals;
      for (std::size_t r = 0; r < reps; ++r) {
        if (est[li * reps + r]) vals.push_back(*est[li * reps + r]);
      }
      row.replicates = static_cast<int>(vals.size());
      row.failures = static_cast<int>(reps - vals.size());
      if (!vals.empty()) {
        double sum = 0.0;
        for (double v : vals) sum += v;
        row.mean = sum / static_cast<double>(vals.size());
        double ss = 0.0;
        for (double v : vals) ss += (v - row.mean) * (v - row.mean);
        row.stddev = vals.size() > 1 ? std::sqrt(ss / static_cast<double>(vals.size() - 1)) : 0.0;
        row.min = *std::min_element(vals.begin(), vals.end());
        row.max = *std::max_element(vals.begin(), vals.end());
        row.bias = row.mean - row.level;
      } else {
        row.mean = row.stddev = row.min = row.max = row.bias = std::numeric_limits<double>::quiet_NaN();
      }
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

std::vector<HausdorffRow> hausdorff_experiment(const synthetic::GroundTruth& truth,
                                               const HausdorffOptions& options) {
  if (options.inits < 1) throw ArgumentError("hausdorff_experiment: inits must be at least 1");
  if (options.max_iter < 0) throw ArgumentError("hausdorff_experiment: max_iter must be non-negative");
  truth.theta.validate();
  const auto data = synthetic::generate(truth, options.n, options.data_seed);
  const auto& y = data.y;
  const SpikeSet& xs = truth.theta.spikes;
  const std::size_t rows = static_cast<std::size_t>(options.max_iter) + 1;
  const auto inits = static_cast<std::size_t>(options.inits);
  const Rng master(options.init_seed);

  // Per init and iteration: smm_sqe, smm_abs, gmm_sqe, gmm_abs. NaN marks a
  // failed run.
  std::vector<double> scores(inits * rows * 4, std::numeric_limits<double>::quiet_NaN());

  parallel_for(inits, options.jobs, [&](std::size_t s) {
    double* out = scores.data() + s * rows * 4;
    Rng rng = master.split(s);
    try {
      smm::ModelParams init = options.truth_init ? truth.theta : smm::random_init(y, truth.theta.components(), rng);
      smm::EmRun run(y, init, 0.0);
      bool done = false;
      for (std::size_t t = 0; t < rows; ++t) {
        if (t > 0 && !done) {
          const double before = run.loglik();
          run.step();
          done = run.loglik() - before < options.conv_threshold;
        }
        out[t * 4 + 0] = scored_distance(xs, run.params().spikes, Metric::sqe, options.sign_invariant);
        out[t * 4 + 1] = scored_distance(xs, run.params().spikes, Metric::abs_cos, options.sign_invariant);
      }
    } catch (const std::exception&) {
      for (std::size_t t = 0; t < rows; ++t) out[t * 4 + 0] = out[t * 4 + 1] = std::numeric_limits<double>::quiet_NaN();
    }
    try {
      baselines::GmmParams init = options.truth_init
                                      ? gmm_from_truth(truth.theta)
                                      : baselines::gmm_random_init(y, truth.theta.components(), options.gmm, rng);
      baselines::GmmRun run(y, init, options.gmm);
      bool done = false;
      for (std::size_t t = 0; t < rows; ++t) {
        if (t > 0 && !done) {
          const double before = run.loglik();
          run.step();
          done = run.loglik() - before < options.conv_threshold;
        }
        const auto ex = baselines::extract_spikes(run.params().covs);
        out[t * 4 + 2] = scored_distance(xs, ex.spikes_gmm, Metric::sqe, options.sign_invariant);
        out[t * 4 + 3] = scored_distance(xs, ex.spikes_gmm, Metric::abs_cos, options.sign_invariant);
      }
    } catch (const std::exception&) {
      for (std::size_t t = 0; t < rows; ++t) out[t * 4 + 2] = out[t * 4 + 3] = std::numeric_limits<double>::quiet_NaN();
    }
  });

  std::vector<HausdorffRow> table(rows);
  for (std::size_t t = 0; t < rows; ++t) {
    double sum[4] = {0, 0, 0, 0};
    int count[4] = {0, 0, 0, 0};
    for (std::size_t s = 0; s < inits; ++s) {
      for (int c = 0; c < 4; ++c) {
        const double v = scores[(s * rows + t) * 4 + c];
        if (std::isnan(v)) continue;
        sum[c] += v;
        ++count[c];
      }
    }
    auto avg = [&](int c) { return count[c] ? sum[c] / count[c] : std::numeric_limits<double>::quiet_NaN(); };
    table[t] = HausdorffRow{static_cast<int>(t), avg(0), avg(1), avg(2), avg(3)};
  }
  return table;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void write_bias_csv(std::ostream& out, const std::vector<BiasRow>& rows) {
  out << "level,method,replicates,failures,mean,std,min,max,bias\n";
  for (const auto& r : rows) {
    out << format_double(r.level) << ',' << r.method << ',' << r.replicates << ',' << r.failures << ','
        << format_double(r.mean) << ',' << format_double(r.stddev) << ',' << format_double(r.min) << ','
        << format_double(r.max) << ',' << format_double(r.bias) << '\n';
  }
}

void write_hausdorff_csv(std::ostream& out, const std::vector<HausdorffRow>& rows) {
  out << "iteration,smm_sqe,smm_abs_cos,gmm_sqe,gmm_abs_cos\n";
  for (const auto& r : rows) {
    out << r.iteration << ',' << format_double(r.smm_sqe) << ',' << format_double(r.smm_abs_cos) << ','
        << format_double(r.gmm_sqe) << ',' << format_double(r.gmm_abs_cos) << '\n';
  }
}

}  // namespace spikefit::metrics

namespace spikefit::metrics {

double label_purity(const std::vector<int>& labels, const std::vector<int>& reference) {
  if (labels.size() != reference.size()) throw ArgumentError("label_purity: length mismatch");
  if (labels.empty()) throw ArgumentError("label_purity: no labels");
  int ka = 0, kb = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 1 || reference[i] < 1) throw ArgumentError("label_purity: labels must be 1-based");
    ka = std::max(ka, labels[i]);
    kb = std::max(kb, reference[i]);
  }
  const int k = std::max(ka, kb);
  std::vector<std::size_t> table(static_cast<std::size_t>(k) * k, 0);
  for (std::size_t i = 0; i < labels.size(); ++i) ++table[(labels[i] - 1) * k + (reference[i] - 1)];

  std::size_t best = 0;
  if (k <= 8) {
    std::vector<int> perm(k);
    for (int i = 0; i < k; ++i) perm[i] = i;
    do {
      std::size_t agree = 0;
      for (int a = 0; a < k; ++a) agree += table[a * k + perm[a]];
      best = std::max(best, agree);
    } while (std::next_permutation(perm.begin(), perm.end()));
  } else {
    std::vector<bool> used_a(k), used_b(k);
    for (int round = 0; round < k; ++round) {
      std::size_t top = 0;
      int ia = -1, ib = -1;
      for (int a = 0; a < k; ++a) {
        if (used_a[a]) continue;
        for (int b = 0; b < k; ++b) {
          if (!used_b[b] && (ia < 0 || table[a * k + b] > top)) {
            top = table[a * k + b];
            ia = a;
            ib = b;
          }
        }
      }
      used_a[ia] = used_b[ib] = true;
      best += top;
    }
  }
  return static_cast<double>(best) / static_cast<double>(labels.size());
}

Comparison compare_methods(const synthetic::GroundTruth& truth, std::size_t n, std::uint64_t data_seed,
                           const smm::FitConfig& config, const baselines::GmmOptions& gmm) {
  const auto data = synthetic::generate(truth, n, data_seed);
  smm::FitConfig cfg = config;
  cfg.k = truth.theta.components();
  const auto s = smm::fit(data.y, cfg);
  const auto g = baselines::gmm_fit(data.y, cfg, gmm);
  const auto ex = baselines::extract_spikes(g.params.covs);

  Comparison c;
  c.truth = truth.theta.spikes;
  c.smm = s.params.spikes;
  c.gmm = ex.spikes_gmm;
  c.smm_noise_var = s.params.noise_var;
  c.gmm_noise_var = ex.sigma_sq_gmm;
  c.gap_ok = ex.gap_ok;
  c.smm_hausdorff_abs_cos = scored_distance(c.truth, c.smm, Metric::abs_cos, false);
  c.gmm_hausdorff_abs_cos = scored_distance(c.truth, c.gmm, Metric::abs_cos, false);
  c.smm_hausdorff_sqe = hausdorff(c.truth, c.smm, Metric::sqe, true);
  c.gmm_hausdorff_sqe = hausdorff(c.truth, c.gmm, Metric::sqe, true);
  c.smm_min_pairwise_abs_cos = min_pairwise_abs_cos(c.smm);
  c.gmm_min_pairwise_abs_cos = min_pairwise_abs_cos(c.gmm);
  return c;
}

}  // namespace spikefit::metrics
