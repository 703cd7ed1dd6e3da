#pragma once

#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "crvb/cr_calculus.hpp"

namespace crvb {

enum class JetMode { Ordinary, Weighted };

JetMode jet_mode_from_string(const std::string& s);
std::string to_string(JetMode mode);

/// Degree-s (or weight-s) part of the Taylor expansion of each Gamma_alpha at 0.
struct JetSpec {
  int order = 0;
  JetMode mode = JetMode::Ordinary;
  PolyForm components;
  /// Max coefficient of dzbar_b Gamma_a - dzbar_a Gamma_b (ordinary) or of the
  /// weight-(s-1) part of Xbar_b Gamma_a - Xbar_a Gamma_b (weighted), relative
  /// to the largest jet coefficient.
  double symmetry_defect = 0.0;
  std::string warning;

  bool empty() const;
  double max_coefficient() const;
  nlohmann::json to_json() const;
  static JetSpec from_json(const nlohmann::json& j);
};

/// Relative symmetry tolerance used by extract_jet warnings and taylor_gauge.
inline constexpr double kSymmetryTolerance = 1e-6;

/// Jet from the exact representation when present, polynomial components
/// next, and a least-squares fit on lattice points around 0 otherwise.
JetSpec extract_jet(const ConnectionForm& omega, int s, JetMode mode);
JetSpec extract_jet(const PolyForm& taylor, int s, JetMode mode);

/// A = I + A^{(s+1)} solving dzbar_a A^{(s+1)} = -Gamma_a^{(s)} (ordinary) or
/// Xbar_a A^{(s+1)} = -Gamma_a^{(s)} (weighted, minimum-norm solution).
MatrixPolynomial taylor_gauge(const JetSpec& jet);

struct NormalizationResult {
  MatrixField gauge;       // A_total, polynomial backend
  ConnectionForm omega;    // gauge_transform(omega, A_total)
  std::vector<JetSpec> stages;
};

/// Kill the jets of degree (weight) 0..k one stage at a time.
NormalizationResult normalize_to_order(const ConnectionForm& omega, int k, JetMode mode,
                                       const TangentialFrame& frame);

struct PrescaleResult {
  ConnectionForm omega;
  double kappa = 1.0;
  double norm_before = 0.0;  // ||omega||_{rho,0} on the source ball
  double norm_after = 0.0;   // ||omega^kappa||_{rho/kappa,0}
};

/// omega^kappa = T_kappa^* omega on the pulled-back chart.
PrescaleResult dilation_prescale(const ConnectionForm& omega, double kappa,
                                 const TangentialFrame& frame);

/// Least-squares fit of a polynomial form of total degree <= degree from
/// samples of `eval` on the tensor stencil {-p..p}^dims * h, p = ceil(degree/2).
/// This is an independent finite-difference jet measurement.
PolyForm fit_jet(const std::function<std::vector<Eigen::MatrixXcd>(const Eigen::VectorXd&)>& eval,
                 int m, int rank, int degree, double h);

/// Largest |T^t X^S Xbar^R Gamma_a(0)| over weights <= k, computed from a jet.
double max_fs_jet(const PolyForm& jet, int k);
/// Largest Taylor coefficient of total degree <= k.
double max_taylor_jet(const PolyForm& jet, int k);

}  // namespace crvb
