#include <doctest.h>

#include <random>

#include <Eigen/SVD>

#include "crvb/error.hpp"
#include "crvb/polynomial.hpp"

using namespace crvb;

namespace {

const Complex kI(0.0, 1.0);

double diff(const MatrixPolynomial& a, const MatrixPolynomial& b) {
  return (a - b).max_coefficient();
}

MatrixPolynomial sample_poly(std::uint64_t seed, int m = 2, int deg = 3) {
  std::mt19937_64 rng(seed);
  return random_polynomial(m, 2, 0, deg, rng, 1.0);
}

Eigen::VectorXd coords_of(std::initializer_list<double> v) {
  Eigen::VectorXd c(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) c[i++] = x;
  return c;
}

}  // namespace

TEST_CASE("holomorphic monomials are annihilated by Xbar") {
  const int m = 2;
  const Eigen::MatrixXcd one = Eigen::MatrixXcd::Identity(2, 2);
  for (int d = 0; d <= 4; ++d)
    for (const auto& e : exponents_of(m, d, false)) {
      if (e[2] || e[3] || e[4]) continue;  // zbar^1, zbar^2, x^n
      const MatrixPolynomial p = MatrixPolynomial::monomial(m, e, one);
      for (int a = 1; a <= m; ++a) CHECK(p.xbar(a).is_zero());
    }
  // z^n = x^n + i|z'|^2 is CR as well
  MatrixPolynomial zn = MatrixPolynomial::x(m, one);
  for (int a = 1; a <= m; ++a)
    zn += kI * MatrixPolynomial::z(m, a, one) * MatrixPolynomial::zbar(m, a, one);
  for (int a = 1; a <= m; ++a) CHECK(zn.xbar(a).max_coefficient() == 0.0);
}

TEST_CASE("frame on coordinate functions") {
  const int m = 2;
  const Eigen::MatrixXcd one = Eigen::MatrixXcd::Identity(1, 1);
  CHECK(diff(MatrixPolynomial::zbar(m, 1, one).xbar(1), MatrixPolynomial::constant(m, one)) == 0.0);
  CHECK(MatrixPolynomial::zbar(m, 2, one).xbar(1).is_zero());
  CHECK(diff(MatrixPolynomial::x(m, one).xbar(2), -kI * MatrixPolynomial::z(m, 2, one)) == 0.0);
  CHECK(diff(MatrixPolynomial::x(m, one).xhol(1), kI * MatrixPolynomial::zbar(m, 1, one)) == 0.0);
}

TEST_CASE("bracket [Xbar_a, X_b] = 2i delta_ab T") {
  const MatrixPolynomial p = sample_poly(7, 2, 4);
  for (int a = 1; a <= 2; ++a)
    for (int b = 1; b <= 2; ++b) {
      const MatrixPolynomial br = p.xhol(b).xbar(a) - p.xbar(a).xhol(b);
      const MatrixPolynomial want =
          a == b ? Complex(0.0, 2.0) * p.t() : MatrixPolynomial(2, 2);
      CHECK(diff(br, want) < 1e-14);
    }
}

TEST_CASE("Leibniz rule and linearity") {
  const MatrixPolynomial p = sample_poly(1), q = sample_poly(2);
  for (int a = 1; a <= 2; ++a) {
    CHECK(diff((p * q).xbar(a), p.xbar(a) * q + p * q.xbar(a)) < 1e-14);
    CHECK(diff((Complex(2.0, -1.0) * p + q).xbar(a),
               Complex(2.0, -1.0) * p.xbar(a) + q.xbar(a)) < 1e-14);
  }
}

TEST_CASE("evaluation, axes and dilation") {
  const MatrixPolynomial p = sample_poly(3);
  const Eigen::VectorXd c = coords_of({0.3, -0.2, 0.1, 0.25, -0.4});
  const double h = 1e-5;
  for (int axis = 0; axis < 5; ++axis) {
    Eigen::VectorXd cp = c, cm = c;
    cp[axis] += h;
    cm[axis] -= h;
    const Eigen::MatrixXcd fd = (p.evaluate(cp) - p.evaluate(cm)) / (2 * h);
    CHECK((fd - p.d_axis(axis).evaluate(c)).norm() < 1e-8);
  }
  for (double kappa : {0.25, 1.0 / 16}) {
    Eigen::VectorXd t = c;
    t.head(4) *= std::sqrt(kappa);
    t[4] *= kappa;
    CHECK((p.dilated(kappa).evaluate(c) - p.evaluate(t)).norm() < 1e-14);
  }
  CHECK((p.value_at_origin() - p.evaluate(Eigen::VectorXd::Zero(5))).norm() == 0.0);
}

TEST_CASE("degree, weight and truncation") {
  const Eigen::MatrixXcd one = Eigen::MatrixXcd::Identity(1, 1);
  const MatrixPolynomial x = MatrixPolynomial::x(2, one);
  const MatrixPolynomial z = MatrixPolynomial::z(2, 1, one);
  const MatrixPolynomial p = x * z + z * z * z * z;
  CHECK(p.degree() == 4);
  CHECK(p.weight() == 4);
  CHECK(p.truncated(2).degree() == 2);
  CHECK(diff(p.weighted_part(3), x * z) == 0.0);
  CHECK(diff(p.homogeneous_part(2), x * z) == 0.0);
  CHECK(exponents_of(2, 2, false).size() == 15u);  // C(6, 2)
  CHECK(exponents_of(2, 2, true).size() == 11u);   // 10 quadratics in z, zbar plus x^n
}

TEST_CASE("truncated inverse series") {
  std::mt19937_64 rng(11);
  MatrixPolynomial p = MatrixPolynomial::identity(2, 2) + 0.3 * random_polynomial(2, 2, 1, 2, rng, 1.0);
  const MatrixPolynomial inv = inverse_series(p, 4);
  const MatrixPolynomial prod = multiply_truncated(p, inv, 4);
  CHECK(diff(prod, MatrixPolynomial::identity(2, 2)) < 1e-14);
  CHECK_THROWS(inverse_series(MatrixPolynomial(2, 2), 2));
}

TEST_CASE("seeded random polynomials") {
  std::mt19937_64 a(5), b(5);
  const MatrixPolynomial p = random_polynomial(2, 2, 1, 2, a, 0.7);
  const MatrixPolynomial q = random_polynomial(2, 2, 1, 2, b, 0.7);
  CHECK(diff(p, q) == 0.0);
  double total = 0.0;
  for (const auto& [e, c] : p.terms()) {
    CHECK(MatrixPolynomial::degree_of(e) >= 1);
    total += Eigen::JacobiSVD<Eigen::MatrixXcd>(c).singularValues()(0);
  }
  CHECK(total == doctest::Approx(0.7).epsilon(1e-12));
  CHECK(elementary(2, 1, 2)(0, 1) == Complex(1.0));
  CHECK(elementary(2, 1, 2).cwiseAbs().sum() == 1.0);
}
