#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "spikefit/errors.hpp"
#include "spikefit/linalg.hpp"
#include "spikefit/rng.hpp"

using namespace spikefit;

namespace {

DataMatrix gaussian_data(Rng& r, std::size_t d, std::size_t n) {
  std::vector<double> v(d * n);
  for (double& x : v) x = r.normal();
  return DataMatrix(d, n, std::move(v));
}

Eigen::MatrixXd to_eigen(const SymMatrix& a) {
  Eigen::MatrixXd m(a.dim(), a.dim());
  for (std::size_t r = 0; r < a.dim(); ++r)
    for (std::size_t c = 0; c < a.dim(); ++c) m(r, c) = a(r, c);
  return m;
}

}  // namespace

TEST_CASE("DataMatrix rejects bad shapes and non-finite entries") {
  CHECK_THROWS_AS(DataMatrix(1, 2, {1.0, 2.0}), ArgumentError);
  CHECK_THROWS_AS(DataMatrix(2, 0, {}), ArgumentError);
  CHECK_THROWS_AS(DataMatrix(2, 2, {1.0, 2.0, 3.0}), ArgumentError);
  CHECK_THROWS_AS(DataMatrix(2, 1, {1.0, NAN}), ArgumentError);
  DataMatrix y(2, 2, {1, 2, 3, 4});
  CHECK(y(1, 0) == 3.0);
  CHECK(y.frobenius_sq() == 30.0);
}

TEST_CASE("SymMatrix validates symmetry") {
  CHECK_THROWS_AS(SymMatrix(2, {1, 2, 3, 4}), ArgumentError);
  CHECK_THROWS_AS(SymMatrix(2, {1, 2, 2}), ArgumentError);
  const auto a = SymMatrix::from_upper(2, {1, 2, 99, 4});
  CHECK(a(1, 0) == 2.0);
  CHECK(a.trace() == 5.0);
  const std::vector<double> x = {1.0, 2.0};
  const auto b = SymMatrix::rank_one_plus_identity(x, 2.0, 0.5);
  CHECK(b(0, 0) == 2.5);
  CHECK(b(0, 1) == 4.0);
  CHECK(b(1, 1) == 8.5);
  std::vector<double> out(2);
  b.multiply(x, out);
  CHECK(out[0] == doctest::Approx(10.5));
  CHECK(out[1] == doctest::Approx(21.0));
}

TEST_CASE("weighted_scatter matches a dense Eigen product") {
  Rng r(5);
  const auto y = gaussian_data(r, 6, 40);
  std::vector<double> w(40);
  for (double& x : w) x = r.uniform();
  const auto s = weighted_scatter(y, w);
  Eigen::MatrixXd ym(6, 40);
  for (std::size_t i = 0; i < 40; ++i)
    for (std::size_t f = 0; f < 6; ++f) ym(f, i) = y(i, f);
  const Eigen::MatrixXd ref = ym * Eigen::Map<Eigen::VectorXd>(w.data(), 40).asDiagonal() * ym.transpose();
  CHECK((to_eigen(s) - ref).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("thresholded scatter moves lambda_1 by at most delta") {
  Rng r(6);
  for (int rep = 0; rep < 30; ++rep) {
    const auto y = gaussian_data(r, 4, 200);
    std::vector<double> w(200);
    for (double& x : w) x = std::pow(r.uniform(), 8.0);
    const double delta = 1e-3 * (1 + rep);
    const auto full = leading_eigenpair(weighted_scatter(y, w)).value;
    const auto cut = leading_eigenpair(thresholded_scatter(y, w, delta)).value;
    CHECK(cut <= full + 1e-9);
    CHECK(full - cut <= delta + 1e-9);
  }
}

TEST_CASE("leading_eigenpair agrees with Eigen's symmetric solver") {
  Rng r(7);
  for (int rep = 0; rep < 200; ++rep) {
    const std::size_t d = 2 + rep % 9;
    const auto y = gaussian_data(r, d, d + 3 + rep % 5);
    const std::vector<double> w(y.count(), 1.0);
    const auto a = weighted_scatter(y, w);
    const auto ep = leading_eigenpair(a);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(to_eigen(a));
    const double ref = es.eigenvalues()(d - 1);
    CHECK(std::abs(ep.value - ref) <= 1e-9 * std::max(1.0, ref));
    const Eigen::VectorXd v = Eigen::Map<const Eigen::VectorXd>(ep.vector.data(), d);
    CHECK(std::abs(v.norm() - 1.0) < 1e-12);
    CHECK((to_eigen(a) * v - ep.value * v).norm() <= 1e-9 * std::max(1.0, ref));
    std::size_t first = 0;
    while (first < d && ep.vector[first] == 0.0) ++first;
    CHECK(ep.vector[first] > 0.0);
  }
}

TEST_CASE("leading_eigenpair handles a tiny spectral gap and the zero matrix") {
  std::vector<double> e(9, 0.0);
  e[0] = 1.0;
  e[4] = 1.0 - 1e-9;
  e[8] = 0.5;
  const auto ep = leading_eigenpair(SymMatrix(3, e));
  CHECK(ep.value == doctest::Approx(1.0).epsilon(1e-12));
  const auto z = leading_eigenpair(SymMatrix(3));
  CHECK(z.value == 0.0);
  CHECK(z.vector.size() == 3);
}

TEST_CASE("Cholesky log_det and Mahalanobis match Eigen") {
  Rng r(8);
  for (int rep = 0; rep < 50; ++rep) {
    const std::size_t d = 2 + rep % 6;
    const auto y = gaussian_data(r, d, 3 * d);
    const auto a = weighted_scatter(y, std::vector<double>(y.count(), 1.0));
    const auto ch = Cholesky::factor(a);
    REQUIRE(ch.has_value());
    const Eigen::MatrixXd m = to_eigen(a);
    Eigen::LLT<Eigen::MatrixXd> llt(m);
    const double ref_ld = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
    CHECK(ch->log_det() == doctest::Approx(ref_ld).epsilon(1e-10));
    std::vector<double> x(d);
    for (double& v : x) v = r.normal();
    const Eigen::VectorXd xv = Eigen::Map<Eigen::VectorXd>(x.data(), d);
    CHECK(ch->mahalanobis_sq(x) == doctest::Approx(xv.dot(llt.solve(xv))).epsilon(1e-9));
  }
  CHECK_FALSE(Cholesky::factor(SymMatrix(3)).has_value());
  CHECK_FALSE(Cholesky::factor(SymMatrix(2, {1, 2, 2, 1})).has_value());
}
