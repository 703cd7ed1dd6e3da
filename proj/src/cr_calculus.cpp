#include "crvb/cr_calculus.hpp"

#include <cmath>

#include "crvb/error.hpp"

namespace crvb {

namespace {

constexpr Complex kI(0.0, 1.0);

struct Term {
  int axis;
  Complex weight;                      // constant weight
  const Eigen::VectorXcd* per_point;   // or a weight per lattice point
};

// Sum of weighted central differences. A point is defined when every stencil
// neighbor exists and is defined.
MatrixField first_order(const MatrixField& f, const std::vector<Term>& terms) {
  const GridChart& g = f.chart();
  MatrixField out(f.chart_ptr(), f.rank());
  const auto& src = f.values();
  auto& dst = out.values();
  for (std::size_t i = 0; i < f.size(); ++i) {
    bool ok = f.defined(i);
    for (const auto& t : terms) {
      if (!ok) break;
      const auto lo = g.neighbor(i, t.axis, -1);
      const auto hi = g.neighbor(i, t.axis, 1);
      ok = lo && hi && f.defined(*lo) && f.defined(*hi);
    }
    out.set_defined(i, ok);
    if (!ok) continue;
    auto col = dst.col(static_cast<Eigen::Index>(i));
    col.setZero();
    for (const auto& t : terms) {
      const auto lo = static_cast<Eigen::Index>(i - g.stride(t.axis));
      const auto hi = static_cast<Eigen::Index>(i + g.stride(t.axis));
      const Complex w = (t.per_point ? (*t.per_point)(static_cast<Eigen::Index>(i)) : t.weight) /
                        (2.0 * g.spacing(t.axis));
      col += w * (src.col(hi) - src.col(lo));
    }
  }
  return out;
}

bool all_polynomial(const ConnectionForm& w) {
  for (const auto& c : w.components)
    if (!c.polynomial()) return false;
  return true;
}

std::shared_ptr<const ExactForm> exact_of(const ConnectionForm& w) {
  if (w.exact) return w.exact;
  if (!w.components.empty() && all_polynomial(w)) {
    PolyForm p;
    for (const auto& c : w.components) p.push_back(*c.polynomial());
    return std::make_shared<ExactForm>(ExactForm::from_polynomials(p));
  }
  return nullptr;
}

// Xbar_alpha from a first-order jet on the Heisenberg frame.
Eigen::MatrixXcd xbar_of_jet(const MatrixJet& j, int alpha, const Eigen::VectorXd& x) {
  const int u = 2 * (alpha - 1);
  const Complex z(x(u), x(u + 1));
  return 0.5 * (j.d[u] + kI * j.d[u + 1]) - kI * z * j.d.back();
}

}  // namespace

DefiningSurface DefiningSurface::heisenberg(int n) {
  require(n >= 3, "n must be at least 3");
  DefiningSurface s;
  s.n = n;
  s.h = [](const Eigen::VectorXd&) { return 0.0; };
  s.grad_h = [n](const Eigen::VectorXd&) { return Eigen::VectorXd::Zero(2 * n - 1).eval(); };
  s.is_heisenberg = true;
  return s;
}

DefiningSurface DefiningSurface::graph(int n, std::function<double(const Eigen::VectorXd&)> h,
                                       std::function<Eigen::VectorXd(const Eigen::VectorXd&)> grad) {
  require(n >= 3, "n must be at least 3");
  require(static_cast<bool>(h), "defining function h is required");
  DefiningSurface s;
  s.n = n;
  s.h = std::move(h);
  s.grad_h = std::move(grad);
  s.is_heisenberg = false;
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(2 * n - 1);
  require(std::abs(s.h(zero)) <= 1e-12, "h must vanish at the origin");
  require(s.gradient(zero).cwiseAbs().maxCoeff() <= 1e-8, "grad h must vanish at the origin");
  return s;
}

Eigen::VectorXd DefiningSurface::gradient(const Eigen::VectorXd& coords) const {
  if (grad_h) return grad_h(coords);
  const double step = 1e-6;
  Eigen::VectorXd g(coords.size());
  for (Eigen::Index k = 0; k < coords.size(); ++k) {
    Eigen::VectorXd a = coords, b = coords;
    a(k) += step;
    b(k) -= step;
    g(k) = (h(a) - h(b)) / (2.0 * step);
  }
  return g;
}

TangentialFrame::TangentialFrame(DefiningSurface surface) : surface_(std::move(surface)) {}

TangentialFrame tangential_frame(const DefiningSurface& surface) { return TangentialFrame(surface); }

Complex TangentialFrame::xbar_coefficient(int alpha, const Eigen::VectorXd& x) const {
  const int u = 2 * (alpha - 1);
  const Complex z(x(u), x(u + 1));
  if (surface_.is_heisenberg) return -kI * z;
  const Eigen::VectorXd g = surface_.gradient(x);
  const Complex h_zbar = 0.5 * (g(u) + kI * g(u + 1));
  const Complex rn = g(x.size() - 1) - kI;  // 2 r_{zbar^n}
  if (std::abs(rn) < 1e-12) throw Error(ErrorKind::DegenerateSurface, "r_n vanishes on the chart");
  return -(z + h_zbar) / rn;
}

Eigen::VectorXcd TangentialFrame::xbar_coefficients(const GridChart& chart, int alpha) const {
  require(chart.n() == n(), "frame and chart dimensions differ");
  require(alpha >= 1 && alpha <= n() - 1, "alpha out of range");
  Eigen::VectorXcd c(static_cast<Eigen::Index>(chart.size()));
  for (std::size_t i = 0; i < chart.size(); ++i)
    c(static_cast<Eigen::Index>(i)) = xbar_coefficient(alpha, chart.coords(i));
  return c;
}

MatrixField apply_xbar(const MatrixField& f, int alpha, const TangentialFrame& frame) {
  if (frame.is_heisenberg() && f.polynomial())
    return MatrixField::sample(f.chart_ptr(), f.polynomial()->xbar(alpha));
  const Eigen::VectorXcd c = frame.xbar_coefficients(f.chart(), alpha);
  const int u = 2 * (alpha - 1);
  return first_order(f, {{u, 0.5, nullptr}, {u + 1, 0.5 * kI, nullptr},
                         {f.chart().dims() - 1, 0.0, &c}});
}

MatrixField apply_xhol(const MatrixField& f, int alpha, const TangentialFrame& frame) {
  if (frame.is_heisenberg() && f.polynomial())
    return MatrixField::sample(f.chart_ptr(), f.polynomial()->xhol(alpha));
  const Eigen::VectorXcd c = frame.xbar_coefficients(f.chart(), alpha).conjugate();
  const int u = 2 * (alpha - 1);
  return first_order(f, {{u, 0.5, nullptr}, {u + 1, -0.5 * kI, nullptr},
                         {f.chart().dims() - 1, 0.0, &c}});
}

MatrixField apply_t(const MatrixField& f) {
  if (f.polynomial()) return MatrixField::sample(f.chart_ptr(), f.polynomial()->t());
  return first_order(f, {{f.chart().dims() - 1, 1.0, nullptr}});
}

MatrixField apply_axis(const MatrixField& f, int axis) {
  require(axis >= 0 && axis < f.chart().dims(), "axis out of range");
  return first_order(f, {{axis, 1.0, nullptr}});
}

ConnectionForm dbar_scalar(const MatrixField& f, const TangentialFrame& frame) {
  require(f.rank() == 1, "scalar field expected");
  return dbar_matrix(f, frame);
}

ConnectionForm dbar_matrix(const MatrixField& a, const TangentialFrame& frame) {
  ConnectionForm out;
  for (int alpha = 1; alpha <= frame.n() - 1; ++alpha)
    out.components.push_back(apply_xbar(a, alpha, frame));
  return out;
}

TwoForm dbar_form(const ConnectionForm& phi, const TangentialFrame& frame) {
  const int m = phi.m();
  TwoForm out(phi.chart_ptr(), phi.rank(), m);
  if (phi.exact && frame.is_heisenberg()) {
    const GridChart& g = phi.chart();
    for (auto& c : out.components) std::fill(c.defined_mask().begin(), c.defined_mask().end(), 0);
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (!g.masked(i)) continue;
      const Eigen::VectorXd x = g.coords(i);
      const auto jets = phi.exact->evaluate_jet(x);
      for (int a = 1; a <= m; ++a)
        for (int b = a + 1; b <= m; ++b) {
          auto& c = out.at(a, b);
          c.at(i) = xbar_of_jet(jets[b - 1], a, x) - xbar_of_jet(jets[a - 1], b, x);
          c.set_defined(i, true);
        }
    }
    return out;
  }
  for (int a = 1; a <= m; ++a)
    for (int b = a + 1; b <= m; ++b)
      out.at(a, b) = apply_xbar(phi[b], a, frame) - apply_xbar(phi[a], b, frame);
  return out;
}

TwoForm wedge(const ConnectionForm& omega, const ConnectionForm& omega2) {
  if (omega.rank() != omega2.rank()) throw Error(ErrorKind::InvalidArgument, "rank mismatch in wedge");
  require(omega.m() == omega2.m(), "form length mismatch in wedge");
  const int m = omega.m();
  TwoForm out(omega.chart_ptr(), omega.rank(), m);
  for (int a = 1; a <= m; ++a)
    for (int b = a + 1; b <= m; ++b)
      out.at(a, b) = omega[a] * omega2[b] - omega[b] * omega2[a];
  return out;
}

TwoForm integrability_residual(const ConnectionForm& omega, const TangentialFrame& frame) {
  if (omega.exact && frame.is_heisenberg()) {
    const int m = omega.m();
    const GridChart& g = omega.chart();
    TwoForm out(omega.chart_ptr(), omega.rank(), m);
    for (auto& c : out.components) std::fill(c.defined_mask().begin(), c.defined_mask().end(), 0);
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (!g.masked(i)) continue;
      const Eigen::VectorXd x = g.coords(i);
      const auto jets = omega.exact->evaluate_jet(x);
      for (int a = 1; a <= m; ++a)
        for (int b = a + 1; b <= m; ++b) {
          const auto& ga = jets[a - 1];
          const auto& gb = jets[b - 1];
          auto& c = out.at(a, b);
          c.at(i) = xbar_of_jet(gb, a, x) - xbar_of_jet(ga, b, x) -
                    (ga.value * gb.value - gb.value * ga.value);
          c.set_defined(i, true);
        }
    }
    return out;
  }
  TwoForm d = dbar_form(omega, frame);
  TwoForm w = wedge(omega, omega);
  for (std::size_t k = 0; k < d.components.size(); ++k)
    d.components[k] = d.components[k] - w.components[k];
  return d;
}

double max_norm(const TwoForm& t) {
  double v = 0.0;
  for (const auto& c : t.components)
    for (std::size_t i = 0; i < c.size(); ++i)
      if (c.active(i)) v = std::max(v, spectral_norm(c.at(i)));
  return v;
}

ConnectionForm sample_exact(ChartPtr chart, const std::shared_ptr<const ExactForm>& exact) {
  require(exact && exact->m() == chart->n() - 1, "exact form does not match chart");
  ConnectionForm w(chart, exact->rank());
  for (std::size_t i = 0; i < chart->size(); ++i) {
    const auto v = exact->evaluate(chart->coords(i));
    for (int a = 0; a < exact->m(); ++a) w.components[a].at(i) = v[a];
  }
  w.exact = exact;
  return w;
}

ConnectionForm gauge_transform(const ConnectionForm& omega, const MatrixField& a,
                               const TangentialFrame& frame) {
  require(a.rank() == omega.rank(), "gauge rank mismatch");
  const MatrixField ainv = inverse(a);  // throws gauge-singular
  if (a.polynomial() && frame.is_heisenberg()) {
    if (auto base = exact_of(omega)) {
      auto gauged = std::make_shared<const ExactForm>(base->gauged(*a.polynomial()));
      return sample_exact(omega.chart_ptr(), gauged);
    }
  }
  const ConnectionForm d = dbar_matrix(a, frame);
  ConnectionForm out;
  for (int k = 0; k < omega.m(); ++k) {
    MatrixField c = (d.components[k] + a * omega.components[k]) * ainv;
    c.drop_polynomial();
    out.components.push_back(std::move(c));
  }
  return out;
}

namespace {

ChartPtr default_pullback_chart(const GridChart& chart, double kappa) {
  return std::make_shared<const GridChart>(dilated_chart(chart, 1.0 / kappa));
}

}  // namespace

MatrixField pullback_field(const MatrixField& a, double kappa, std::optional<ChartPtr> target) {
  require(kappa > 0.0, "dilation scale must be positive");
  ChartPtr dest = target ? *target : default_pullback_chart(a.chart(), kappa);
  std::shared_ptr<const MatrixPolynomial> poly;
  if (a.polynomial()) poly = std::make_shared<MatrixPolynomial>(a.polynomial()->dilated(kappa));
  const GridChart natural = dilated_chart(a.chart(), 1.0 / kappa);
  if (dest->same_lattice(natural)) {
    // lattice point i of dest is T_{1/kappa} of lattice point i of the source
    MatrixField out(dest, a.rank());
    out.values() = a.values();
    out.defined_mask() = a.defined_mask();
    out.set_polynomial(poly);
    return out;
  }
  if (!poly)
    throw Error(ErrorKind::UnsupportedScale, "dilation does not map the lattice to itself");
  return MatrixField::sample(dest, *poly);
}

ConnectionForm pullback_form(const ConnectionForm& omega, double kappa,
                             std::optional<ChartPtr> target) {
  require(kappa > 0.0, "dilation scale must be positive");
  ChartPtr dest = target ? *target : default_pullback_chart(omega.chart(), kappa);
  const Complex sk(std::sqrt(kappa), 0.0);
  const GridChart natural = dilated_chart(omega.chart(), 1.0 / kappa);
  if (dest->same_lattice(natural)) {
    ConnectionForm out;
    for (const auto& c : omega.components) out.components.push_back(sk * pullback_field(c, kappa, dest));
    if (omega.exact) out.exact = std::make_shared<const ExactForm>(omega.exact->pulled_back(kappa));
    return out;
  }
  if (omega.exact)
    return sample_exact(dest, std::make_shared<const ExactForm>(omega.exact->pulled_back(kappa)));
  if (all_polynomial(omega)) {
    ConnectionForm out;
    for (const auto& c : omega.components)
      out.components.push_back(MatrixField::sample(dest, sk * c.polynomial()->dilated(kappa)));
    return out;
  }
  throw Error(ErrorKind::UnsupportedScale, "dilation does not map the lattice to itself");
}

}  // namespace crvb
