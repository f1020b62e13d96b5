#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include "spikefit/errors.hpp"
#include "spikefit/metrics.hpp"

using namespace spikefit;
using namespace spikefit::metrics;

TEST_CASE("spike distances") {
  const std::vector<double> a = {1, 0}, b = {0, 2}, c = {-3, 0};
  CHECK(d_sqe(a, b) == 5.0);
  CHECK(d_abs_cos(a, b) == 1.0);
  CHECK(d_abs_cos(a, c) == doctest::Approx(0.0));
  CHECK_THROWS_AS(d_abs_cos(a, std::vector<double>{0, 0}), ArgumentError);
  CHECK(distance(Metric::sqe, a, c) == 16.0);
}

TEST_CASE("hausdorff against a brute-force definition") {
  Rng r(3);
  for (int rep = 0; rep < 100; ++rep) {
    SpikeSet x(2 + rep % 3, std::vector<double>(3)), y(1 + rep % 4, std::vector<double>(3));
    for (auto& v : x) for (double& e : v) e = r.normal();
    for (auto& v : y) for (double& e : v) e = r.normal();
    for (bool inv : {false, true}) {
      auto dist = [&](const std::vector<double>& p, const std::vector<double>& q) {
        double s = 0, t = 0;
        for (int i = 0; i < 3; ++i) {
          s += (p[i] - q[i]) * (p[i] - q[i]);
          t += (p[i] + q[i]) * (p[i] + q[i]);
        }
        return inv ? std::min(s, t) : s;
      };
      double h = 0.0;
      for (const auto& p : x) {
        double m = INFINITY;
        for (const auto& q : y) m = std::min(m, dist(p, q));
        h = std::max(h, m);
      }
      for (const auto& q : y) {
        double m = INFINITY;
        for (const auto& p : x) m = std::min(m, dist(p, q));
        h = std::max(h, m);
      }
      CHECK(hausdorff(x, y, Metric::sqe, inv) == doctest::Approx(h));
    }
    CHECK(hausdorff(x, x, Metric::sqe) == 0.0);
    CHECK(hausdorff(x, y, Metric::sqe, true) <= hausdorff(x, y, Metric::sqe) + 1e-15);
  }
}

TEST_CASE("sign invariance of the hausdorff distance") {
  const SpikeSet x = {{1, 2}, {3, -1}};
  const SpikeSet flipped = {{-1, -2}, {3, -1}};
  CHECK(hausdorff(x, flipped, Metric::sqe, true) == 0.0);
  CHECK(hausdorff(x, flipped, Metric::sqe, false) == 17.0);
  CHECK(hausdorff(x, flipped, Metric::abs_cos) == doctest::Approx(0.0));
}

TEST_CASE("pairwise cosine and nonzero members") {
  const SpikeSet s = {{1, 0}, {0, 0}, {1, 1}};
  CHECK(min_pairwise_abs_cos(s) == doctest::Approx(1.0 - std::sqrt(0.5)));
  CHECK(min_pairwise_abs_cos({{1, 0}, {0, 0}}) == 0.0);
  CHECK(nonzero_members(s).size() == 2);
}

TEST_CASE("label purity is invariant to relabeling") {
  const std::vector<int> ref = {1, 1, 2, 2, 3, 3, 3};
  CHECK(label_purity({2, 2, 3, 3, 1, 1, 1}, ref) == 1.0);
  CHECK(label_purity({1, 1, 1, 2, 2, 2, 2}, ref) == doctest::Approx(5.0 / 7.0));
  std::vector<int> big, lab;
  for (int i = 0; i < 100; ++i) {
    big.push_back(1 + i % 10);
    lab.push_back(1 + (i + 3) % 10);
  }
  CHECK(label_purity(lab, big) == 1.0);
}

TEST_CASE("bias experiment rows and csv") {
  BiasOptions opt;
  opt.levels = {1.0, 5.0};
  opt.replicates = 2;
  opt.n = 300;
  opt.config = smm::FitConfig::synthetic_preset(3);
  opt.config.sieve = {2, 2, 1, 30};
  opt.config.rng_seed = 4;
  const auto rows = bias_experiment(opt);
  REQUIRE(rows.size() == 4);
  CHECK(rows[0].method == "smm");
  CHECK(rows[1].method == "gmm");
  CHECK(rows[2].level == 5.0);
  for (const auto& r : rows) {
    CHECK(r.replicates + r.failures == 2);
    if (r.replicates > 0) CHECK(r.bias == doctest::Approx(r.mean - r.level));
  }
  std::ostringstream os;
  write_bias_csv(os, rows);
  const std::string csv = os.str();
  CHECK(csv.rfind("level,method,replicates,failures,mean,std,min,max,bias\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 5);
}

TEST_CASE("hausdorff experiment from the truth stays small") {
  const auto truth = synthetic::five_dim_three_spikes(0.5, 1.0, 2);
  HausdorffOptions opt;
  opt.n = 800;
  opt.inits = 2;
  opt.max_iter = 5;
  opt.truth_init = true;
  opt.sign_invariant = true;
  const auto rows = hausdorff_experiment(truth, opt);
  REQUIRE(rows.size() == 6);
  CHECK(rows[0].smm_sqe == 0.0);
  CHECK(rows.back().smm_abs_cos < 0.05);
  std::ostringstream os;
  write_hausdorff_csv(os, rows);
  CHECK(os.str().rfind("iteration,smm_sqe,smm_abs_cos,gmm_sqe,gmm_abs_cos\n", 0) == 0);
}

TEST_CASE("format_double round-trips") {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 12345678.9}) CHECK(std::stod(format_double(v)) == v);
  CHECK(format_double(2.0) == "2");
}
