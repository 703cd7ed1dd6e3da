#pragma once

#include <vector>

#include <Eigen/Core>

#include "crvb/polynomial.hpp"

namespace crvb {

/// Matrix value with its first partial derivatives along the real graph axes.
struct MatrixJet {
  Eigen::MatrixXcd value;
  std::vector<Eigen::MatrixXcd> d;
};

/// Connection form obtained by gauging a polynomial form with a rational gauge:
///
///   omega = (Xbar C + C omega_p) C^{-1},   C = F_1 F_2 ... F_q,
///
/// where each factor F_i is a polynomial matrix or the inverse of one. This
/// family is closed under gauge transforms by polynomial gauges and under
/// Heisenberg dilations, and it contains every pure gauge -A^{-1} Xbar A.
/// Values and first derivatives are computed in closed form (no differencing),
/// so integrability holds to rounding. Heisenberg surface (h = 0) only.
class ExactForm {
 public:
  ExactForm(int m, int rank);

  static ExactForm from_polynomials(const PolyForm& form);
  /// -A^{-1} Xbar A, i.e. the gauge transform of 0 by A^{-1}.
  static ExactForm pure_gauge(const MatrixPolynomial& a);

  int m() const { return m_; }
  int rank() const { return rank_; }

  /// Gauge transform by a polynomial gauge A: (Xbar A + A omega) A^{-1}.
  ExactForm gauged(const MatrixPolynomial& a) const;
  /// T_kappa^* omega = sqrt(kappa) Gamma(sqrt(kappa) z', kappa x^n).
  ExactForm pulled_back(double kappa) const;

  std::vector<Eigen::MatrixXcd> evaluate(const Eigen::VectorXd& coords) const;
  std::vector<MatrixJet> evaluate_jet(const Eigen::VectorXd& coords) const;
  /// Taylor polynomial at 0 through total degree `degree`.
  PolyForm taylor(int degree) const;

 private:
  struct Factor {
    MatrixPolynomial p;
    bool inverted = false;
    std::vector<MatrixPolynomial> xbar;               // Xbar_alpha p
    std::vector<MatrixPolynomial> dp;                 // d_axis p
    std::vector<std::vector<MatrixPolynomial>> dxbar; // d_axis Xbar_alpha p
  };
  static Factor make_factor(const MatrixPolynomial& p, bool inverted);
  void prepare_base();

  int m_;
  int rank_;
  PolyForm base_;
  std::vector<std::vector<MatrixPolynomial>> dbase_;
  std::vector<Factor> factors_;
};

}  // namespace crvb
