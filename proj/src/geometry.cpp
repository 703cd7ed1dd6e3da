#include "crvb/geometry.hpp"

#include <cmath>

#include "crvb/error.hpp"

namespace crvb {

Point dilate(const Point& p, double kappa) {
  if (!(kappa > 0.0)) throw Error(ErrorKind::InvalidArgument, "dilation scale must be positive");
  Point q;
  q.zprime = std::sqrt(kappa) * p.zprime;
  q.xn = kappa * p.xn;
  return q;
}

double koranyi_gauge(const Point& p) {
  const double z2 = p.zprime.squaredNorm();
  return std::pow(z2 * z2 + p.xn * p.xn, 0.25);
}

bool in_heisenberg_ball(const Point& p, double rho) {
  const double z2 = p.zprime.squaredNorm();
  return z2 * z2 + p.xn * p.xn <= rho * rho * (1.0 + 1e-12);
}

GridChart::GridChart(int n, double lattice_rho, int resolution, double rho)
    : n_(n), lattice_rho_(lattice_rho), resolution_(resolution), rho_(rho) {
  require(n >= 3, "n must be at least 3");
  require(lattice_rho > 0.0 && rho > 0.0, "radius must be positive");
  require(resolution >= 3 && resolution % 2 == 1, "resolution must be odd and >= 3");
  require(rho <= lattice_rho * (1.0 + 1e-12), "mask radius exceeds the lattice box");

  const int d = dims();
  spacing_.resize(d);
  stride_.resize(d);
  const double zhalf = std::sqrt(lattice_rho);
  for (int a = 0; a < d; ++a) {
    const double half = (a == d - 1) ? lattice_rho : zhalf;
    spacing_[a] = 2.0 * half / (resolution - 1);
  }
  std::size_t s = 1;
  for (int a = d - 1; a >= 0; --a) {
    stride_[a] = s;
    s *= static_cast<std::size_t>(resolution);
  }
  size_ = s;

  // Membership is evaluated in normalized coordinates so that dilated charts
  // carry bit-identical masks.
  const double ratio = rho / lattice_rho;
  const double bound = ratio * ratio * (1.0 + 1e-12);
  mask_.assign(size_, 0);
  for (std::size_t i = 0; i < size_; ++i) {
    double z2 = 0.0;
    for (int a = 0; a < d - 1; ++a) {
      const double t = normalized(index_along(i, a));
      z2 += t * t;
    }
    const double tx = normalized(index_along(i, d - 1));
    if (z2 * z2 + tx * tx <= bound) {
      mask_[i] = 1;
      ++masked_count_;
    }
  }
}

double GridChart::normalized(int lattice_index) const {
  return static_cast<double>(2 * lattice_index - (resolution_ - 1)) / (resolution_ - 1);
}

std::optional<std::size_t> GridChart::neighbor(std::size_t i, int axis, int step) const {
  const int k = index_along(i, axis) + step;
  if (k < 0 || k >= resolution_) return std::nullopt;
  const auto delta = static_cast<std::ptrdiff_t>(stride_[axis]) * step;
  return static_cast<std::size_t>(static_cast<std::ptrdiff_t>(i) + delta);
}

std::size_t GridChart::origin() const {
  std::size_t i = 0;
  const std::size_t c = static_cast<std::size_t>(resolution_ / 2);
  for (int a = 0; a < dims(); ++a) i += c * stride_[a];
  return i;
}

Eigen::VectorXd GridChart::coords(std::size_t i) const {
  const int d = dims();
  Eigen::VectorXd c(d);
  const double zhalf = std::sqrt(lattice_rho_);
  for (int a = 0; a < d; ++a) {
    const double half = (a == d - 1) ? lattice_rho_ : zhalf;
    c[a] = half * normalized(index_along(i, a));
  }
  return c;
}

Point GridChart::point(std::size_t i) const {
  const Eigen::VectorXd c = coords(i);
  Point p;
  p.zprime.resize(n_ - 1);
  for (int al = 0; al < n_ - 1; ++al) p.zprime[al] = Complex(c[2 * al], c[2 * al + 1]);
  p.xn = c[dims() - 1];
  return p;
}

bool GridChart::same_lattice(const GridChart& other) const {
  return n_ == other.n_ && resolution_ == other.resolution_ && lattice_rho_ == other.lattice_rho_;
}

GridChart build_grid(int n, double rho, int resolution) {
  if (resolution % 2 == 0)
    throw Error(ErrorKind::InvalidArgument, "resolution must be odd (centered stencil at 0)");
  return GridChart(n, rho, resolution, rho);
}

GridChart restrict_chart(const GridChart& chart, double rho_new) {
  if (!(rho_new > 0.0) || rho_new > chart.rho())
    throw Error(ErrorKind::InvalidArgument, "restriction radius must lie in (0, rho]");
  return GridChart(chart.n(), chart.lattice_rho(), chart.resolution(), rho_new);
}

GridChart dilated_chart(const GridChart& chart, double kappa) {
  require(kappa > 0.0, "dilation scale must be positive");
  return GridChart(chart.n(), chart.lattice_rho() * kappa, chart.resolution(), chart.rho() * kappa);
}

RadiusSchedule radius_schedule(double rho0, int jmax) {
  if (!(rho0 > 0.0)) throw Error(ErrorKind::InvalidArgument, "rho0 must be positive");
  require(jmax >= 1, "jmax must be at least 1");
  RadiusSchedule s;
  s.rho0 = rho0;
  s.rhos.push_back(rho0);
  for (int j = 0; j <= jmax; ++j) {
    s.sigmas.push_back(schedule_sigma(j));
    if (j < jmax) s.rhos.push_back(s.rhos.back() * (1.0 - schedule_sigma(j)));
  }
  double prod = 1.0;
  for (int j = 0; j <= 60; ++j) prod *= 1.0 - schedule_sigma(j);
  s.rho_infinity = rho0 * prod;
  return s;
}

}  // namespace crvb
