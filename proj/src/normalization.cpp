#include "crvb/normalization.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <tuple>

#include <Eigen/Dense>

#include "crvb/error.hpp"
#include "crvb/io.hpp"
#include "crvb/norms.hpp"

namespace crvb {

namespace {

constexpr Complex kI(0.0, 1.0);

double max_coeff(const PolyForm& f) {
  double v = 0.0;
  for (const auto& p : f) v = std::max(v, p.max_coefficient());
  return v;
}

double symmetry_defect(const PolyForm& comps, JetMode mode) {
  const int m = static_cast<int>(comps.size());
  double defect = 0.0;
  for (int a = 1; a <= m; ++a)
    for (int b = a + 1; b <= m; ++b) {
      const MatrixPolynomial d =
          mode == JetMode::Ordinary ? comps[a - 1].d_zbar(b) - comps[b - 1].d_zbar(a)
                                    : comps[a - 1].xbar(b) - comps[b - 1].xbar(a);
      defect = std::max(defect, d.max_coefficient());
    }
  const double scale = max_coeff(comps);
  return scale > 0.0 ? defect / scale : 0.0;
}

// Real monomial basis in the graph axes, total degree <= degree.
std::vector<Exponent> real_exponents(int dims, int degree) {
  std::vector<Exponent> out;
  Exponent cur(dims, 0);
  std::function<void(int, int)> rec = [&](int pos, int left) {
    if (pos == dims) {
      out.push_back(cur);
      return;
    }
    for (int e = 0; e <= left; ++e) {
      cur[pos] = e;
      rec(pos + 1, left - e);
    }
    cur[pos] = 0;
  };
  rec(0, degree);
  return out;
}

// Scalar polynomial in (z, zbar, x) equal to prod axis^e over the real axes.
MatrixPolynomial real_monomial(int m, const Exponent& e) {
  const Eigen::MatrixXcd one = Eigen::MatrixXcd::Identity(1, 1);
  MatrixPolynomial p = MatrixPolynomial::identity(m, 1);
  for (int a = 1; a <= m; ++a) {
    const MatrixPolynomial u = Complex(0.5) * (MatrixPolynomial::z(m, a, one) + MatrixPolynomial::zbar(m, a, one));
    const MatrixPolynomial v = Complex(0.0, -0.5) * (MatrixPolynomial::z(m, a, one) - MatrixPolynomial::zbar(m, a, one));
    for (int k = 0; k < e[2 * (a - 1)]; ++k) p = p * u;
    for (int k = 0; k < e[2 * (a - 1) + 1]; ++k) p = p * v;
  }
  for (int k = 0; k < e[2 * m]; ++k) p = p * MatrixPolynomial::x(m, one);
  return p;
}

// Least-squares polynomial fit of total degree <= degree; points in graph coords.
PolyForm fit_points(const std::vector<Eigen::VectorXd>& pts,
                    const std::vector<std::vector<Eigen::MatrixXcd>>& vals, int m, int rank,
                    int degree) {
  const int dims = 2 * m + 1;
  const auto basis = real_exponents(dims, degree);
  Eigen::VectorXd scale = Eigen::VectorXd::Constant(dims, 1e-300);
  for (const auto& p : pts) scale = scale.cwiseMax(p.cwiseAbs());
  const Eigen::Index np = static_cast<Eigen::Index>(pts.size());
  const Eigen::Index nb = static_cast<Eigen::Index>(basis.size());
  require(np >= nb, "not enough samples for the jet fit");
  Eigen::MatrixXd v(np, nb);
  for (Eigen::Index i = 0; i < np; ++i) {
    const Eigen::VectorXd t = pts[i].cwiseQuotient(scale);
    for (Eigen::Index b = 0; b < nb; ++b) {
      double prod = 1.0;
      for (int a = 0; a < dims; ++a) prod *= std::pow(t(a), basis[b][a]);
      v(i, b) = prod;
    }
  }
  // Right-hand sides: (component, entry, re/im).
  const int ncols = m * rank * rank * 2;
  Eigen::MatrixXd rhs(np, ncols);
  for (Eigen::Index i = 0; i < np; ++i)
    for (int a = 0; a < m; ++a)
      for (int e = 0; e < rank * rank; ++e) {
        const Complex c = vals[i][a](e % rank, e / rank);
        rhs(i, 2 * (a * rank * rank + e)) = c.real();
        rhs(i, 2 * (a * rank * rank + e) + 1) = c.imag();
      }
  const Eigen::MatrixXd coef = v.colPivHouseholderQr().solve(rhs);
  PolyForm out(m, MatrixPolynomial(m, rank));
  for (Eigen::Index b = 0; b < nb; ++b) {
    double unscale = 1.0;
    for (int a = 0; a < dims; ++a) unscale /= std::pow(scale(a), basis[b][a]);
    const MatrixPolynomial mono = real_monomial(m, basis[b]);
    for (int a = 0; a < m; ++a) {
      Eigen::MatrixXcd c(rank, rank);
      for (int e = 0; e < rank * rank; ++e)
        c(e % rank, e / rank) = unscale * Complex(coef(b, 2 * (a * rank * rank + e)),
                                                  coef(b, 2 * (a * rank * rank + e) + 1));
      for (const auto& [ex, s] : mono.terms()) out[a].add_term(ex, s(0, 0) * c);
    }
  }
  for (auto& p : out) p.prune();
  return out;
}

PolyForm grid_jet(const ConnectionForm& omega, int degree) {
  const GridChart& g = omega.chart();
  const int p = std::max(1, (degree + 1) / 2);
  require(g.resolution() >= 2 * p + 1, "resolution too small for the jet stencil");
  const std::size_t o = g.origin();
  std::vector<Eigen::VectorXd> pts;
  std::vector<std::vector<Eigen::MatrixXcd>> vals;
  const int dims = g.dims();
  std::vector<int> off(dims, -p);
  while (true) {
    std::size_t idx = o;
    for (int a = 0; a < dims; ++a) idx = static_cast<std::size_t>(static_cast<long long>(idx) + off[a] * static_cast<long long>(g.stride(a)));
    bool ok = true;
    std::vector<Eigen::MatrixXcd> v;
    for (const auto& c : omega.components) {
      ok = ok && c.defined(idx);
      v.push_back(c.at(idx));
    }
    if (ok) {
      pts.push_back(g.coords(idx));
      vals.push_back(std::move(v));
    }
    int a = 0;
    while (a < dims && ++off[a] > p) off[a++] = -p;
    if (a == dims) break;
  }
  return fit_points(pts, vals, omega.m(), omega.rank(), degree);
}

bool all_polynomial(const ConnectionForm& w) {
  for (const auto& c : w.components)
    if (!c.polynomial()) return false;
  return true;
}

MatrixPolynomial weighted_solve(const JetSpec& jet) {
  const int m = static_cast<int>(jet.components.size());
  const int rank = jet.components.front().rank();
  const auto unknowns = exponents_of(m, jet.order + 1, true);
  const Eigen::MatrixXcd one = Eigen::MatrixXcd::Identity(1, 1);
  std::map<std::pair<int, Exponent>, Eigen::Index> rows;
  auto row_of = [&](int a, const Exponent& e) {
    auto it = rows.find({a, e});
    if (it != rows.end()) return it->second;
    const Eigen::Index r = static_cast<Eigen::Index>(rows.size());
    rows.emplace(std::make_pair(a, e), r);
    return r;
  };
  std::vector<std::vector<std::tuple<Eigen::Index, Complex>>> cols(unknowns.size());
  for (std::size_t u = 0; u < unknowns.size(); ++u)
    for (int a = 1; a <= m; ++a) {
      const MatrixPolynomial d = MatrixPolynomial::monomial(m, unknowns[u], one).xbar(a);
      for (const auto& [e, c] : d.terms()) cols[u].emplace_back(row_of(a, e), c(0, 0));
    }
  for (int a = 1; a <= m; ++a)
    for (const auto& [e, c] : jet.components[a - 1].terms()) row_of(a, e);
  const Eigen::Index nr = static_cast<Eigen::Index>(rows.size());
  const Eigen::Index nc = static_cast<Eigen::Index>(unknowns.size());
  Eigen::MatrixXcd k = Eigen::MatrixXcd::Zero(nr, nc);
  for (Eigen::Index u = 0; u < nc; ++u)
    for (const auto& [r, c] : cols[u]) k(r, u) += c;
  Eigen::MatrixXcd rhs = Eigen::MatrixXcd::Zero(nr, rank * rank);
  for (int a = 1; a <= m; ++a)
    for (const auto& [e, c] : jet.components[a - 1].terms())
      for (int q = 0; q < rank * rank; ++q) rhs(rows.at({a, e}), q) = -c(q % rank, q / rank);
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXcd> cod(k);
  const Eigen::MatrixXcd x = cod.solve(rhs);
  const double res = (k * x - rhs).norm();
  if (res > 1e-9 * rhs.norm())
    throw Error(ErrorKind::NoSolution, "weighted jet equation has no solution (residual " +
                                           std::to_string(res) + ")");
  MatrixPolynomial a1(m, rank);
  for (Eigen::Index u = 0; u < nc; ++u) {
    Eigen::MatrixXcd c(rank, rank);
    for (int q = 0; q < rank * rank; ++q) c(q % rank, q / rank) = x(u, q);
    a1.add_term(unknowns[u], c);
  }
  return a1.prune();
}

}  // namespace

JetMode jet_mode_from_string(const std::string& s) {
  if (s == "ordinary" || s == "taylor") return JetMode::Ordinary;
  if (s == "weighted" || s == "fs") return JetMode::Weighted;
  throw Error(ErrorKind::InvalidArgument, "unknown jet mode: " + s);
}

std::string to_string(JetMode mode) { return mode == JetMode::Ordinary ? "ordinary" : "weighted"; }

bool JetSpec::empty() const {
  for (const auto& p : components)
    if (!p.is_zero()) return false;
  return true;
}

double JetSpec::max_coefficient() const { return max_coeff(components); }

nlohmann::json JetSpec::to_json() const {
  nlohmann::json comps = nlohmann::json::array();
  for (const auto& p : components) comps.push_back(polynomial_to_json(p));
  return {{"order", order}, {"mode", crvb::to_string(mode)}, {"symmetry_defect", symmetry_defect},
          {"warning", warning}, {"components", comps}};
}

JetSpec JetSpec::from_json(const nlohmann::json& j) {
  JetSpec s;
  try {
    s.order = j.at("order").get<int>();
    s.mode = jet_mode_from_string(j.at("mode").get<std::string>());
    s.symmetry_defect = j.value("symmetry_defect", 0.0);
    s.warning = j.value("warning", std::string());
    for (const auto& c : j.at("components")) s.components.push_back(polynomial_from_json(c));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Format, std::string("bad jet JSON: ") + e.what());
  }
  return s;
}

JetSpec extract_jet(const PolyForm& taylor, int s, JetMode mode) {
  require(s >= 0, "jet order must be nonnegative");
  JetSpec jet;
  jet.order = s;
  jet.mode = mode;
  for (const auto& p : taylor) {
    MatrixPolynomial part = mode == JetMode::Ordinary ? p.homogeneous_part(s) : p.weighted_part(s);
    jet.components.push_back(part.prune());
  }
  jet.symmetry_defect = symmetry_defect(jet.components, mode);
  if (jet.symmetry_defect > kSymmetryTolerance)
    jet.warning = "integrability violation: symmetry defect " + std::to_string(jet.symmetry_defect);
  return jet;
}

JetSpec extract_jet(const ConnectionForm& omega, int s, JetMode mode) {
  PolyForm taylor;
  if (omega.exact) {
    taylor = omega.exact->taylor(s);
  } else if (all_polynomial(omega)) {
    for (const auto& c : omega.components) taylor.push_back(c.polynomial()->truncated(s));
  } else {
    taylor = grid_jet(omega, s);
  }
  return extract_jet(taylor, s, mode);
}

MatrixPolynomial taylor_gauge(const JetSpec& jet) {
  require(!jet.components.empty(), "jet has no components");
  const int m = static_cast<int>(jet.components.size());
  const int rank = jet.components.front().rank();
  MatrixPolynomial a = MatrixPolynomial::identity(m, rank);
  if (jet.empty()) return a;
  if (jet.mode == JetMode::Weighted) return a + weighted_solve(jet);
  if (jet.symmetry_defect > kSymmetryTolerance)
    throw Error(ErrorKind::NoSolution, "jet is not symmetric; dzbar A = -Gamma is inconsistent");
  // Radial homotopy in zbar': A1 = -sum_a zbar^a int_0^1 Gamma_a(z, t zbar, x) dt.
  MatrixPolynomial a1(m, rank);
  for (int al = 1; al <= m; ++al)
    for (const auto& [e, c] : jet.components[al - 1].terms()) {
      int barred = 0;
      for (int b = 0; b < m; ++b) barred += e[m + b];
      Exponent f = e;
      ++f[m + al - 1];
      a1.add_term(f, (-1.0 / (barred + 1)) * c);
    }
  return a + a1.prune();
}

NormalizationResult normalize_to_order(const ConnectionForm& omega, int k, JetMode mode,
                                       const TangentialFrame& frame) {
  require(k >= 0, "normalization order must be nonnegative");
  if (mode == JetMode::Weighted && !frame.is_heisenberg())
    throw Error(ErrorKind::UnsupportedSurface, "weighted normalization needs the Heisenberg frame");
  const ChartPtr chart = omega.chart_ptr();
  NormalizationResult res;
  MatrixPolynomial total = MatrixPolynomial::identity(omega.m(), omega.rank());
  ConnectionForm cur = omega;
  for (int s = 0; s <= k; ++s) {
    JetSpec jet = extract_jet(cur, s, mode);
    res.stages.push_back(jet);
    if (jet.empty()) continue;
    const MatrixPolynomial a = taylor_gauge(jet);
    cur = gauge_transform(cur, MatrixField::sample(chart, a), frame);
    total = a * total;
  }
  res.gauge = MatrixField::sample(chart, total);
  res.omega = cur;
  return res;
}

PrescaleResult dilation_prescale(const ConnectionForm& omega, double kappa,
                                 const TangentialFrame& frame) {
  if (!frame.is_heisenberg())
    throw Error(ErrorKind::UnsupportedSurface, "dilations need the Heisenberg frame");
  PrescaleResult r;
  r.kappa = kappa;
  r.norm_before = ck_norm(omega, omega.chart().rho(), 0).value;
  const bool resample = omega.exact || all_polynomial(omega);
  r.omega = resample ? pullback_form(omega, kappa, omega.chart_ptr()) : pullback_form(omega, kappa);
  r.norm_after = ck_norm(r.omega, r.omega.chart().rho(), 0).value;
  return r;
}

PolyForm fit_jet(const std::function<std::vector<Eigen::MatrixXcd>(const Eigen::VectorXd&)>& eval,
                 int m, int rank, int degree, double h) {
  require(degree >= 0 && h > 0.0, "bad jet fit parameters");
  const int dims = 2 * m + 1;
  const int p = std::max(1, (degree + 1) / 2);
  std::vector<Eigen::VectorXd> pts;
  std::vector<std::vector<Eigen::MatrixXcd>> vals;
  std::vector<int> off(dims, -p);
  while (true) {
    Eigen::VectorXd x(dims);
    for (int a = 0; a < dims; ++a) x(a) = off[a] * h;
    pts.push_back(x);
    vals.push_back(eval(x));
    int a = 0;
    while (a < dims && ++off[a] > p) off[a++] = -p;
    if (a == dims) break;
  }
  return fit_points(pts, vals, m, rank, degree);
}

double max_fs_jet(const PolyForm& jet, int k) {
  double v = 0.0;
  for (const auto& p : jet)
    for (const auto& idx : fs_indices(p.m(), k))
      v = std::max(v, spectral_norm(p.fs_derivative(idx.t, idx.s, idx.r).value_at_origin()));
  return v;
}

double max_taylor_jet(const PolyForm& jet, int k) {
  double v = 0.0;
  for (const auto& p : jet) v = std::max(v, p.truncated(k).max_coefficient());
  return v;
}

}  // namespace crvb
