#pragma once

#include <functional>
#include <optional>

#include <Eigen/Core>

#include "crvb/exact_form.hpp"
#include "crvb/fields.hpp"

namespace crvb {

/// r(z) = -y^n + |z'|^2 + h(z', x^n), with h given in graph coordinates.
struct DefiningSurface {
  int n = 3;
  std::function<double(const Eigen::VectorXd&)> h;
  /// Gradient of h along the graph axes; numerical when not supplied.
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> grad_h;
  bool is_heisenberg = true;

  static DefiningSurface heisenberg(int n);
  /// Validates h(0) = 0 and grad h(0) = 0.
  static DefiningSurface graph(int n, std::function<double(const Eigen::VectorXd&)> h,
                               std::function<Eigen::VectorXd(const Eigen::VectorXd&)> grad = {});

  Eigen::VectorXd gradient(const Eigen::VectorXd& coords) const;
};

/// Xbar_alpha = d_{zbar^alpha} + c_alpha d_x, X_alpha = d_{z^alpha} + conj(c_alpha) d_x,
/// T = d_x, with c_alpha = -(z^alpha + h_{zbar^alpha}) / (h_x - i).
class TangentialFrame {
 public:
  explicit TangentialFrame(DefiningSurface surface);

  const DefiningSurface& surface() const { return surface_; }
  int n() const { return surface_.n; }
  bool is_heisenberg() const { return surface_.is_heisenberg; }

  Complex xbar_coefficient(int alpha, const Eigen::VectorXd& coords) const;
  /// c_alpha sampled on every lattice point of a chart; throws on degenerate r_n.
  Eigen::VectorXcd xbar_coefficients(const GridChart& chart, int alpha) const;

 private:
  DefiningSurface surface_;
};

TangentialFrame tangential_frame(const DefiningSurface& surface);

/// Grid derivatives by second-order central differences. Exact on the
/// polynomial backend when the frame is Heisenberg.
MatrixField apply_xbar(const MatrixField& f, int alpha, const TangentialFrame& frame);
MatrixField apply_xhol(const MatrixField& f, int alpha, const TangentialFrame& frame);
MatrixField apply_t(const MatrixField& f);
/// Central difference along one graph axis (grid values only).
MatrixField apply_axis(const MatrixField& f, int axis);

/// Scalar fields are rank-1 matrix fields.
ConnectionForm dbar_scalar(const MatrixField& f, const TangentialFrame& frame);
ConnectionForm dbar_matrix(const MatrixField& a, const TangentialFrame& frame);
/// Coefficient at (a,b), a<b: Xbar_a Gamma_b - Xbar_b Gamma_a.
TwoForm dbar_form(const ConnectionForm& phi, const TangentialFrame& frame);
/// Coefficient at (a,b), a<b: Gamma_a Gamma'_b - Gamma_b Gamma'_a.
TwoForm wedge(const ConnectionForm& omega, const ConnectionForm& omega2);
TwoForm integrability_residual(const ConnectionForm& omega, const TangentialFrame& frame);
/// Largest spectral norm of a two-form over active points.
double max_norm(const TwoForm& t);

/// (dbar A + A omega) A^{-1}.
ConnectionForm gauge_transform(const ConnectionForm& omega, const MatrixField& a,
                               const TangentialFrame& frame);

/// sqrt(kappa) Gamma(sqrt(kappa) z', kappa x^n). Without a target the result
/// lives on dilated_chart(chart, 1/kappa) (masked at rho/kappa) and grid values
/// are copied index by index; other targets need polynomial or exact data.
ConnectionForm pullback_form(const ConnectionForm& omega, double kappa,
                             std::optional<ChartPtr> target = std::nullopt);
/// A(sqrt(kappa) z', kappa x^n), same chart conventions.
MatrixField pullback_field(const MatrixField& a, double kappa,
                           std::optional<ChartPtr> target = std::nullopt);

/// Sample an exact form on a chart (all points defined).
ConnectionForm sample_exact(ChartPtr chart, const std::shared_ptr<const ExactForm>& exact);

}  // namespace crvb
