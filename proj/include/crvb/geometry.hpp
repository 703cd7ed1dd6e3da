#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include <Eigen/Core>

namespace crvb {

using Complex = std::complex<double>;

/// A point of the graph hypersurface, stored in graph coordinates (z', x^n).
/// y^n is reconstructed from the defining function and never stored.
struct Point {
  Eigen::VectorXcd zprime;
  double xn = 0.0;

  /// y^n on the hyperquadric (h = 0).
  double yn() const { return zprime.squaredNorm(); }
};

/// Non-isotropic dilation T_kappa(z', z^n) = (sqrt(kappa) z', kappa z^n).
Point dilate(const Point& p, double kappa);

/// Korányi gauge (|z'|^4 + (x^n)^2)^{1/4}.
double koranyi_gauge(const Point& p);

/// Membership in the Heisenberg ball D_rho: |z'|^4 + (x^n)^2 <= rho^2.
bool in_heisenberg_ball(const Point& p, double rho);

/// Masked uniform lattice over the bounding box of a Heisenberg ball.
///
/// Axes are ordered (Re z^1, Im z^1, ..., Re z^{n-1}, Im z^{n-1}, x^n) and the
/// linear index runs with x^n fastest. The box is fixed by `lattice_rho`
/// (half-widths sqrt(lattice_rho) on z-axes, lattice_rho on x^n); the mask is
/// the ball of radius `rho` <= lattice_rho. Two charts with equal resolution
/// are related by the dilation lattice_rho'/lattice_rho index by index.
class GridChart {
 public:
  GridChart(int n, double lattice_rho, int resolution, double rho);

  int n() const { return n_; }
  int dims() const { return 2 * n_ - 1; }
  int resolution() const { return resolution_; }
  double rho() const { return rho_; }
  double lattice_rho() const { return lattice_rho_; }
  double spacing(int axis) const { return spacing_[axis]; }
  const std::vector<double>& spacings() const { return spacing_; }

  std::size_t size() const { return size_; }
  std::size_t masked_count() const { return masked_count_; }
  bool masked(std::size_t i) const { return mask_[i] != 0; }
  const std::vector<std::uint8_t>& mask() const { return mask_; }

  std::size_t stride(int axis) const { return stride_[axis]; }
  int index_along(std::size_t i, int axis) const {
    return static_cast<int>((i / stride_[axis]) % static_cast<std::size_t>(resolution_));
  }
  /// Neighbor `step` cells along `axis`, or nullopt when it leaves the lattice.
  std::optional<std::size_t> neighbor(std::size_t i, int axis, int step) const;
  std::size_t origin() const;

  /// Lattice offset in [-1, 1] along an axis, independent of lattice_rho.
  double normalized(int lattice_index) const;
  Eigen::VectorXd coords(std::size_t i) const;
  Point point(std::size_t i) const;

  /// True when both charts share n, resolution and lattice_rho.
  bool same_lattice(const GridChart& other) const;

 private:
  int n_;
  double lattice_rho_;
  int resolution_;
  double rho_;
  std::size_t size_ = 0;
  std::size_t masked_count_ = 0;
  std::vector<double> spacing_;
  std::vector<std::size_t> stride_;
  std::vector<std::uint8_t> mask_;
};

using ChartPtr = std::shared_ptr<const GridChart>;

/// Lattice over the bounding box of D_rho with the ball mask. Resolution must
/// be odd so that the origin is a lattice point.
GridChart build_grid(int n, double rho, int resolution);

/// Same lattice with the mask tightened to D_{rho_new}.
GridChart restrict_chart(const GridChart& chart, double rho_new);

/// Chart related to `chart` by the dilation T_kappa: its lattice point i is
/// T_kappa applied to lattice point i of `chart`.
GridChart dilated_chart(const GridChart& chart, double kappa);

struct RadiusSchedule {
  double rho0 = 1.0;
  std::vector<double> sigmas;  // sigma_j = 2^{-j-1}, j = 0..jmax
  std::vector<double> rhos;    // rho_0..rho_jmax
  double rho_infinity = 0.0;
};

RadiusSchedule radius_schedule(double rho0, int jmax);

inline double schedule_sigma(int j) { return std::ldexp(1.0, -j - 1); }

}  // namespace crvb
