#pragma once

#include <map>
#include <random>
#include <vector>

#include <Eigen/Core>

#include "crvb/geometry.hpp"

namespace crvb {

/// Exponents over (z^1..z^m, zbar^1..zbar^m, x^n), m = n - 1.
using Exponent = std::vector<int>;

/// Polynomial in (z', zbar', x^n) with r x r complex matrix coefficients.
///
/// This is the exact backend: differentiation by the Heisenberg frame
/// (h = 0), products, dilation and evaluation introduce no truncation error.
/// Terms are kept in lexicographic exponent order.
class MatrixPolynomial {
 public:
  MatrixPolynomial() = default;
  MatrixPolynomial(int m, int rank) : m_(m), rank_(rank) {}

  static MatrixPolynomial constant(int m, const Eigen::MatrixXcd& c);
  static MatrixPolynomial identity(int m, int rank);
  static MatrixPolynomial monomial(int m, const Exponent& e, const Eigen::MatrixXcd& c);
  /// Scalar coordinate functions times a coefficient matrix.
  static MatrixPolynomial z(int m, int alpha, const Eigen::MatrixXcd& c);
  static MatrixPolynomial zbar(int m, int alpha, const Eigen::MatrixXcd& c);
  static MatrixPolynomial x(int m, const Eigen::MatrixXcd& c);

  int m() const { return m_; }
  int rank() const { return rank_; }
  int num_vars() const { return 2 * m_ + 1; }
  const std::map<Exponent, Eigen::MatrixXcd>& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }

  void add_term(const Exponent& e, const Eigen::MatrixXcd& c);
  /// Drops terms whose coefficient max-norm is <= tol.
  MatrixPolynomial& prune(double tol = 0.0);

  int degree() const;
  int weight() const;
  static int degree_of(const Exponent& e);
  static int weight_of(const Exponent& e, int m);

  MatrixPolynomial homogeneous_part(int degree) const;
  MatrixPolynomial weighted_part(int weight) const;
  MatrixPolynomial truncated(int max_degree) const;

  MatrixPolynomial d_z(int alpha) const;
  MatrixPolynomial d_zbar(int alpha) const;
  MatrixPolynomial d_x() const;
  /// Partial derivative along a real graph axis (Re z^a, Im z^a, x^n ordering).
  MatrixPolynomial d_axis(int axis) const;
  MatrixPolynomial times_z(int alpha) const;
  MatrixPolynomial times_zbar(int alpha) const;

  /// Heisenberg frame: X_abar = d_zbar - i z d_x, X_a = d_z + i zbar d_x, T = d_x.
  MatrixPolynomial xbar(int alpha) const;
  MatrixPolynomial xhol(int alpha) const;
  MatrixPolynomial t() const { return d_x(); }
  /// T^m X^S Xbar^R applied right to left.
  MatrixPolynomial fs_derivative(int m, const std::vector<int>& s, const std::vector<int>& r) const;

  /// p(sqrt(kappa) z', kappa x^n).
  MatrixPolynomial dilated(double kappa) const;
  MatrixPolynomial adjoint_coefficients() const;

  Eigen::MatrixXcd evaluate(const Eigen::VectorXd& coords) const;
  Eigen::MatrixXcd value_at_origin() const;
  double max_coefficient() const;

  MatrixPolynomial& operator+=(const MatrixPolynomial& o);
  MatrixPolynomial& operator-=(const MatrixPolynomial& o);
  MatrixPolynomial& operator*=(Complex s);

 private:
  int m_ = 0;
  int rank_ = 0;
  std::map<Exponent, Eigen::MatrixXcd> terms_;
};

MatrixPolynomial operator+(MatrixPolynomial a, const MatrixPolynomial& b);
MatrixPolynomial operator-(MatrixPolynomial a, const MatrixPolynomial& b);
MatrixPolynomial operator-(MatrixPolynomial a);
MatrixPolynomial operator*(const MatrixPolynomial& a, const MatrixPolynomial& b);
MatrixPolynomial operator*(Complex s, MatrixPolynomial a);
MatrixPolynomial operator*(const Eigen::MatrixXcd& c, const MatrixPolynomial& p);
MatrixPolynomial operator*(const MatrixPolynomial& p, const Eigen::MatrixXcd& c);

/// Product truncated at total degree `max_degree`.
MatrixPolynomial multiply_truncated(const MatrixPolynomial& a, const MatrixPolynomial& b,
                                    int max_degree);
/// Truncated power-series inverse around 0 (requires p(0) invertible).
MatrixPolynomial inverse_series(const MatrixPolynomial& p, int max_degree);

/// All exponents of the given total degree (or weight, when `weighted`).
std::vector<Exponent> exponents_of(int m, int order, bool weighted);

/// (0,1)-form with polynomial coefficients, one entry per dzbar^alpha.
using PolyForm = std::vector<MatrixPolynomial>;

/// Seeded random polynomial containing every monomial of total degree in
/// [min_degree, max_degree], normalized so the sum of coefficient spectral
/// norms equals `scale` (hence |p| <= scale on the unit ball D_1).
MatrixPolynomial random_polynomial(int m, int rank, int min_degree, int max_degree,
                                   std::mt19937_64& rng, double scale);

/// Elementary matrix E_{ij} (1-based indices).
Eigen::MatrixXcd elementary(int rank, int i, int j);

}  // namespace crvb
