#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <vector>

#include "spikefit/baselines.hpp"
#include "spikefit/errors.hpp"
#include "spikefit/metrics.hpp"
#include "spikefit/synthetic.hpp"

using namespace spikefit;
using namespace spikefit::baselines;

namespace {

double dense_gauss(std::span<const double> y, const std::vector<double>& mu, const SymMatrix& s) {
  const auto d = static_cast<Eigen::Index>(y.size());
  Eigen::MatrixXd c(d, d);
  Eigen::VectorXd r(d);
  for (Eigen::Index i = 0; i < d; ++i) {
    r(i) = y[i] - mu[i];
    for (Eigen::Index j = 0; j < d; ++j) c(i, j) = s(i, j);
  }
  return std::exp(-0.5 * r.dot(c.inverse() * r)) / std::sqrt(std::pow(2 * std::numbers::pi, d) * c.determinant());
}

}  // namespace

TEST_CASE("GMM E-step matches dense densities") {
  const auto ds = synthetic::generate(synthetic::planar_three_spikes(0.3), 60, 4);
  GmmParams p;
  p.means = {{0.0, 0.0}, {1.0, -1.0}};
  p.covs = {SymMatrix(2, {1.0, 0.2, 0.2, 0.5}), SymMatrix::identity(2, 2.0)};
  p.weights = {0.3, 0.7};
  const auto es = gmm_e_step(ds.y, p);
  double ll = 0.0;
  for (std::size_t i = 0; i < ds.y.count(); ++i) {
    const double a = 0.3 * dense_gauss(ds.y.observation(i), p.means[0], p.covs[0]);
    const double b = 0.7 * dense_gauss(ds.y.observation(i), p.means[1], p.covs[1]);
    ll += std::log(a + b);
    CHECK(es.rho(i, 0) == doctest::Approx(a / (a + b)).epsilon(1e-10));
  }
  CHECK(es.loglik == doctest::Approx(ll).epsilon(1e-10));
  p.covs[0] = SymMatrix(2, {1.0, 2.0, 2.0, 1.0});
  CHECK_THROWS_AS(gmm_e_step(ds.y, p), ConvergenceError);
}

TEST_CASE("GMM EM is monotone with free and zero means") {
  const auto truth = synthetic::sample_ground_truth(3, 4, 0.4, 1.0, 17);
  const auto ds = synthetic::generate(truth, 400, 18);
  for (bool zero : {false, true}) {
    GmmOptions opt;
    opt.zero_mean = zero;
    Rng r(3);
    GmmRun run(ds.y, gmm_random_init(ds.y, 3, opt, r), opt);
    for (int i = 0; i < 50; ++i) run.step();
    const auto& t = run.trace();
    for (std::size_t i = 1; i < t.size(); ++i) CHECK(t[i] >= t[i - 1] - 1e-9 * std::abs(t[i - 1]));
    if (zero) {
      for (const auto& m : run.params().means) CHECK(m == std::vector<double>(4, 0.0));
    }
  }
}

TEST_CASE("extract_spikes inverts exact spiked covariances") {
  Rng r(5);
  for (int rep = 0; rep < 50; ++rep) {
    const double s2 = 0.1 + r.uniform();
    std::vector<std::vector<double>> xs(3, std::vector<double>(5));
    std::vector<SymMatrix> covs;
    for (auto& x : xs) {
      for (double& v : x) v = 2.0 * r.normal();
      covs.push_back(SymMatrix::rank_one_plus_identity(x, 1.0, s2));
    }
    const auto ex = extract_spikes(covs);
    CHECK(ex.gap_ok);
    CHECK(ex.sigma_sq_gmm == doctest::Approx(s2).epsilon(1e-10));
    CHECK(metrics::hausdorff(xs, ex.spikes_gmm, metrics::Metric::sqe, true) < 1e-16 + 1e-10);
    CHECK(spectral_gap_check(covs));
  }
}

TEST_CASE("spectral gap check fails without a dominant direction and spikes get clamped") {
  std::vector<SymMatrix> covs = {SymMatrix::identity(3, 1.0), SymMatrix(3, {5, 0, 0, 0, 5, 0, 0, 0, 5})};
  CHECK_FALSE(spectral_gap_check(std::span<const SymMatrix>(covs)));
  const auto ex = extract_spikes(covs);
  CHECK_FALSE(ex.gap_ok);
  CHECK(ex.clamped[0]);
  CHECK(ex.spikes_gmm[0] == std::vector<double>(3, 0.0));
}

TEST_CASE("gmm_fit needs more observations than K*d") {
  const auto ds = synthetic::generate(synthetic::planar_three_spikes(0.3), 6, 1);
  CHECK_THROWS_AS(gmm_fit(ds.y, smm::FitConfig::synthetic_preset(3)), ArgumentError);
}

TEST_CASE("kmeans separates well-spread clusters and is reproducible") {
  Rng r(9);
  std::vector<double> v;
  std::vector<int> truth;
  const double centers[3][2] = {{0, 0}, {10, 0}, {0, 10}};
  for (int i = 0; i < 300; ++i) {
    const int c = i % 3;
    v.push_back(centers[c][0] + 0.3 * r.normal());
    v.push_back(centers[c][1] + 0.3 * r.normal());
    truth.push_back(c + 1);
  }
  const DataMatrix y(2, 300, v);
  const auto a = kmeans_fit(y, 3, 1);
  CHECK(metrics::label_purity(a.labels, truth) == 1.0);
  for (std::size_t i = 1; i < a.inertia_trace.size(); ++i) CHECK(a.inertia_trace[i] <= a.inertia_trace[i - 1]);
  CHECK(kmeans_fit(y, 3, 1).labels == a.labels);
  for (int l : a.labels) CHECK((l >= 1 && l <= 3));
}

TEST_CASE("kmeans with more clusters than distinct points still labels everything") {
  const DataMatrix y(2, 4, {1, 1, 1, 1, 1, 1, 2, 2});
  const auto res = kmeans_fit(y, 3, 2);
  CHECK(res.labels.size() == 4);
  CHECK(res.labels[0] == res.labels[1]);
}

TEST_CASE("GMM with K = 1 returns the sample mean and covariance") {
  Rng r(10);
  std::vector<double> v(3 * 500);
  for (std::size_t i = 0; i < 500; ++i) {
    v[3 * i] = 1.0 + r.normal();
    v[3 * i + 1] = -2.0 + 0.5 * r.normal();
    v[3 * i + 2] = 0.3 * v[3 * i] + r.normal();
  }
  const DataMatrix y(3, 500, v);
  auto cfg = smm::FitConfig::synthetic_preset(1);
  cfg.sieve = {1, 1, 1, 5};
  const auto g = gmm_fit(y, cfg);
  Eigen::MatrixXd m = Eigen::Map<const Eigen::MatrixXd>(v.data(), 3, 500);
  const Eigen::VectorXd mean = m.rowwise().mean();
  const Eigen::MatrixXd c = m.colwise() - mean;
  const Eigen::MatrixXd cov = c * c.transpose() / 500.0;
  for (int i = 0; i < 3; ++i) {
    CHECK(std::abs(g.params.means[0][i] - mean(i)) < 1e-6);
    for (int j = 0; j < 3; ++j) CHECK(std::abs(g.params.covs[0](i, j) - cov(i, j)) < 1e-6);
  }
}
