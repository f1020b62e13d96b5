#include <doctest.h>

#include <cmath>
#include <vector>

#include "spikefit/rng.hpp"

using namespace spikefit;

TEST_CASE("same seed gives the same stream") {
  Rng a(123), b(123);
  for (int i = 0; i < 100; ++i) {
    CHECK(a.next_u64() == b.next_u64());
    CHECK(a.normal() == b.normal());
  }
}

TEST_CASE("split streams are reproducible and leave the parent untouched") {
  Rng parent(9);
  Rng c1 = parent.split(0), c1b = parent.split(0), c2 = parent.split(1);
  CHECK(c1.next_u64() == c1b.next_u64());
  Rng c1c = parent.split(0);
  c1c.next_u64();
  CHECK(c1c.next_u64() != c2.next_u64());
  Rng fresh(9);
  CHECK(parent.next_u64() == fresh.next_u64());
}

TEST_CASE("uniform stays in [0,1) and has the right mean") {
  Rng r(1);
  double s = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double u = r.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    s += u;
  }
  CHECK(std::abs(s / n - 0.5) < 4.0 * std::sqrt(1.0 / 12.0 / n));
}

TEST_CASE("normal and exponential moments") {
  Rng r(2);
  const int n = 200000;
  double s = 0, s2 = 0, e = 0;
  for (int i = 0; i < n; ++i) {
    const double z = r.normal();
    s += z;
    s2 += z * z;
    e += r.exponential();
  }
  CHECK(std::abs(s / n) < 4.0 / std::sqrt(n));
  CHECK(std::abs(s2 / n - 1.0) < 4.0 * std::sqrt(2.0 / n));
  CHECK(std::abs(e / n - 1.0) < 4.0 / std::sqrt(n));
}

TEST_CASE("below is unbiased over a non power of two") {
  Rng r(3);
  std::vector<int> counts(7, 0);
  const int n = 70000;
  for (int i = 0; i < n; ++i) {
    const auto v = r.below(7);
    REQUIRE(v < 7);
    ++counts[v];
  }
  for (int c : counts) CHECK(std::abs(c - 10000) < 4.0 * std::sqrt(10000.0 * 6.0 / 7.0));
}

TEST_CASE("categorical follows the weights and never picks a zero weight") {
  Rng r(4);
  const std::vector<double> w = {0.5, 0.0, 1.5, 2.0};
  std::vector<int> counts(4, 0);
  const int n = 40000;
  for (int i = 0; i < n; ++i) ++counts[r.categorical(w)];
  CHECK(counts[1] == 0);
  for (int k : {0, 2, 3}) {
    const double p = w[k] / 4.0;
    CHECK(std::abs(counts[k] - n * p) < 4.0 * std::sqrt(n * p * (1 - p)));
  }
}

TEST_CASE("mix_seed separates streams") {
  CHECK(mix_seed(1, 0) != mix_seed(1, 1));
  CHECK(mix_seed(1, 0) != mix_seed(2, 0));
  CHECK(mix_seed(5, 5) == mix_seed(5, 5));
}
