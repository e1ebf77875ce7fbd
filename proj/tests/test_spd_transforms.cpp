#include <unsupported/Eigen/KroneckerProduct>

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <boost/multiprecision/eigen.hpp>

#include <cmath>
#include <random>

#include "doctest.h"
#include "logbekk/spd_transforms.hpp"
#include "test_support.hpp"

using Big = boost::multiprecision::number<boost::multiprecision::cpp_bin_float<100>>;

// Boost's NumTraits for Eigen 3.4 lacks infinity()/quiet_NaN(), which the
// generic hypot needs; route it to the multiprecision hypot instead.
namespace Eigen::internal {
template <>
struct hypot_impl<Big> {
  static Big run(const Big& x, const Big& y) { return boost::multiprecision::hypot(x, y); }
};
}  // namespace Eigen::internal

using namespace logbekk;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

// Oracle: materialize U ⊗ U and pick rows/columns at the column-major vec
// positions of the vech pairs.
MatrixXd ustar_by_kronecker(const MatrixXd& u) {
  const Index n = u.rows();
  const MatrixXd full = Eigen::kroneckerProduct(u, u);
  const VechIndexMap map(n);
  MatrixXd out(map.size(), map.size());
  for (Index p = 0; p < map.size(); ++p)
    for (Index q = 0; q < map.size(); ++q) {
      const auto [ip, jp] = map.pair_of(p);
      const auto [iq, jq] = map.pair_of(q);
      // vec index of (i, j) with column-major stacking is j*n + i; (U⊗U)[(j,i),(l,k)] = U_jl U_ik
      out(p, q) = full(jp * n + ip, jq * n + iq);
    }
  return out;
}

}  // namespace

TEST_CASE("mat_log: identity, diagonal and equicorrelation examples") {
  CHECK(mat_log(MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-15);

  MatrixXd d = MatrixXd::Zero(2, 2);
  d(0, 0) = std::exp(1.0);
  d(1, 1) = std::exp(2.0);
  const MatrixXd ld = mat_log(d);
  CHECK(ld(0, 0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(ld(1, 1) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(std::abs(ld(0, 1)) < 1e-15);

  MatrixXd c(2, 2);
  c << 1, 0.5, 0.5, 1;
  // eigenvalues 1.5 and 0.5 along (1,1)/√2 and (1,-1)/√2
  const double diag = 0.5 * (std::log(1.5) + std::log(0.5));
  const double off = 0.5 * (std::log(1.5) - std::log(0.5));
  const MatrixXd lc = mat_log(c);
  CHECK(lc(0, 0) == doctest::Approx(diag).epsilon(1e-13));
  CHECK(lc(1, 1) == doctest::Approx(diag).epsilon(1e-13));
  CHECK(lc(0, 1) == doctest::Approx(off).epsilon(1e-13));
  CHECK(lc(0, 0) == doctest::Approx(-0.1438).epsilon(1e-3));
  CHECK(lc(0, 1) == doctest::Approx(0.5493).epsilon(1e-3));
}

TEST_CASE("mat_log: error paths") {
  MatrixXd asym(2, 2);
  asym << 1, 0.5, 0.4, 1;
  CHECK_THROWS_AS(mat_log(asym), NotSymmetric);

  MatrixXd indefinite(2, 2);
  indefinite << 1, 2, 2, 1;
  try {
    mat_log(indefinite);
    FAIL("expected NotPositiveDefinite");
  } catch (const NotPositiveDefinite& e) {
    CHECK(e.min_eigenvalue() == doctest::Approx(-1.0));
  }

  MatrixXd tiny = MatrixXd::Identity(2, 2);
  tiny(1, 1) = 1e-14;
  CHECK_THROWS_AS(mat_log(tiny), NotPositiveDefinite);
  const MatrixXd clipped = mat_log(tiny, MatLogOptions{1e-12, true});
  CHECK(clipped(1, 1) == doctest::Approx(std::log(1e-12)));

  // asymmetry within tolerance is accepted and symmetrized
  MatrixXd nearly = MatrixXd::Identity(2, 2);
  nearly(0, 1) = 1e-13;
  CHECK(max_asymmetry(mat_log(nearly)) == 0.0);
}

TEST_CASE("mat_exp: examples invert mat_log") {
  CHECK((mat_exp(MatrixXd::Zero(2, 2)) - MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-15);

  MatrixXd d = MatrixXd::Zero(2, 2);
  d(0, 0) = 1;
  d(1, 1) = 2;
  const MatrixXd ed = mat_exp(d);
  CHECK(ed(0, 0) == doctest::Approx(std::exp(1.0)).epsilon(1e-14));
  CHECK(ed(1, 1) == doctest::Approx(std::exp(2.0)).epsilon(1e-14));

  MatrixXd g(2, 2);
  g << -0.1438, 0.5493, 0.5493, -0.1438;
  const MatrixXd c = mat_exp(g);
  CHECK(c(0, 0) == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(c(0, 1) == doctest::Approx(0.5).epsilon(1e-3));

  MatrixXd asym(2, 2);
  asym << 0, 1, 0, 0;
  CHECK_THROWS_AS(mat_exp(asym), NotSymmetric);
}

TEST_CASE("property: exp(log C) = C and eigenvalues map through log") {
  std::mt19937_64 rng(20240601);
  for (int rep = 0; rep < 200; ++rep) {
    const Index n = 2 + rep % 5;
    VectorXd lambda;
    const MatrixXd c = test::random_spd(rng, n, 0.01, 100.0, &lambda);
    const MatrixXd lg = mat_log(c);
    CHECK((mat_exp(lg) - c).norm() / c.norm() < 1e-10);

    Eigen::SelfAdjointEigenSolver<MatrixXd> es(lg, Eigen::EigenvaluesOnly);
    VectorXd expected = lambda.array().log();
    std::sort(expected.data(), expected.data() + n);
    CHECK((es.eigenvalues() - expected).cwiseAbs().maxCoeff() < 1e-10);

    const MatrixXd m = test::random_symmetric(rng, n, -2.0, 2.0);
    CHECK((mat_log(mat_exp(m)) - m).norm() / m.norm() < 1e-10);
  }
}

TEST_CASE("property: mat_exp output is SPD for entries in [-20, 20]") {
  // exp of such matrices spans up to ~1e100 in condition number, far beyond
  // what a double-precision eigensolver can certify, so the check runs in
  // 100-digit arithmetic through the scalar-generic kernel.
  std::mt19937_64 rng(77);
  for (int rep = 0; rep < 25; ++rep) {
    const Index n = 2 + rep % 5;
    const MatrixXd m = test::random_symmetric(rng, n, -20.0, 20.0);
    const Matrix<Big> e = mat_exp(Matrix<Big>(m.cast<Big>()));
    CHECK(is_spd(e));
    // the double-precision result is SPD too whenever the spectrum is resolvable
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(m, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().maxCoeff() - es.eigenvalues().minCoeff() < 25.0) CHECK(is_spd(mat_exp(m)));
  }
}

TEST_CASE("vech and unvech follow the column-major lower-triangle contract") {
  MatrixXd m(2, 2);
  m << 1.5, -2.0, -2.0, 4.0;
  const VectorXd v = vech(m);
  REQUIRE(v.size() == 3);
  CHECK(v(0) == 1.5);
  CHECK(v(1) == -2.0);
  CHECK(v(2) == 4.0);

  VectorXd id(6);
  id << 1, 0, 0, 1, 0, 1;
  CHECK(vech(MatrixXd::Identity(3, 3)) == id);

  VectorXd three(3);
  three << 1, 0, 1;
  CHECK(unvech(three) == MatrixXd::Identity(2, 2));

  VectorXd six(6);
  six << 4, 1, 2, 9, 3, 16;
  const MatrixXd u = unvech(six);
  CHECK(u(0, 0) == 4);
  CHECK(u(1, 1) == 9);
  CHECK(u(2, 2) == 16);
  CHECK(u(1, 0) == 1);
  CHECK(u(2, 0) == 2);
  CHECK(u(2, 1) == 3);
  CHECK(u == u.transpose());

  CHECK_THROWS_AS(unvech(VectorXd::Zero(4)), BadLength);
  CHECK_THROWS_AS(unvech(VectorXd::Zero(0)), BadLength);
  MatrixXd asym(2, 2);
  asym << 1, 2, 3, 4;
  CHECK_THROWS_AS(vech(asym), NotSymmetric);
}

TEST_CASE("property: vech/unvech are exact inverses and the index map is a bijection") {
  std::mt19937_64 rng(5);
  for (Index n = 1; n <= 7; ++n) {
    const VechIndexMap map(n);
    CHECK(map.size() == vech_length(n));
    for (Index k = 0; k < map.size(); ++k) {
      const auto [i, j] = map.pair_of(k);
      CHECK(i >= j);
      CHECK(map.index_of(i, j) == k);
      CHECK(map.index_of(j, i) == k);
    }
    const MatrixXd m = test::random_symmetric(rng, n, -5.0, 5.0);
    CHECK(unvech(vech(m)) == m);
    const VectorXd v = vech(m);
    CHECK(vech(unvech(v)) == v);
  }
}

TEST_CASE("select_ustar: examples") {
  CHECK(select_ustar(MatrixXd::Identity(2, 2)) == MatrixXd::Identity(3, 3));

  MatrixXd d = MatrixXd::Zero(2, 2);
  d(0, 0) = 0.3;
  d(1, 1) = 0.7;
  const MatrixXd us = select_ustar(d);
  const MatrixXd oracle = ustar_by_kronecker(d);
  CHECK((us - oracle).cwiseAbs().maxCoeff() == 0.0);
  CHECK(us(0, 0) == doctest::Approx(0.09));
  CHECK(us(1, 1) == doctest::Approx(0.21));
  CHECK(us(2, 2) == doctest::Approx(0.49));
  CHECK(std::abs(us(0, 1)) + std::abs(us(0, 2)) + std::abs(us(1, 2)) == 0.0);

  MatrixXd asym(2, 2);
  asym << 1, 2, 3, 4;
  CHECK_THROWS_AS(select_ustar(asym), NotSymmetric);
}

TEST_CASE("property: select_ustar equals the Kronecker selection and is symmetric") {
  std::mt19937_64 rng(11);
  for (int rep = 0; rep < 50; ++rep) {
    const Index n = 1 + rep % 4;
    const MatrixXd u = test::random_symmetric(rng, n, -3.0, 3.0);
    const MatrixXd us = select_ustar(u);
    CHECK((us - ustar_by_kronecker(u)).cwiseAbs().maxCoeff() <= 1e-14);
    CHECK(us == us.transpose());
  }
}
