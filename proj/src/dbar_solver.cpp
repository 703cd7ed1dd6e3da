#include "crvb/dbar_solver.hpp"

#include <cmath>
#include <functional>
#include <optional>
#include <iomanip>
#include <random>
#include <sstream>

#include <Eigen/Dense>
#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include "crvb/norms.hpp"

namespace crvb {

namespace {

constexpr Complex kI(0.0, 1.0);
using SpMat = Eigen::SparseMatrix<Complex>;
using Triplet = Eigen::Triplet<Complex>;

double cell_volume(const GridChart& g) {
  double v = 1.0;
  for (double h : g.spacings()) v *= h;
  return v;
}

bool stencil_inside(const GridChart& g, std::size_t i) {
  for (int a = 0; a < g.dims(); ++a)
    if (!g.neighbor(i, a, -1) || !g.neighbor(i, a, 1)) return false;
  return true;
}

MatrixField grid_only(const MatrixField& f) {
  MatrixField out = f;
  out.drop_polynomial();
  return out;
}

struct System {
  std::vector<std::size_t> eq_points;
  std::vector<long long> unknown_index;  // lattice point -> unknown slot, -1 if none
  std::vector<std::size_t> unknown_points;
  SpMat m;
};

// Builds the operator acting on one row of B (a 1 x r row vector per unknown point).
System assemble(const ConnectionForm& omega, double rho, const TangentialFrame& frame,
                const MatrixField* gauge) {
  const GridChart& g = omega.chart();
  const int m = omega.m();
  const int r = omega.rank();
  const GridChart ball(g.n(), g.lattice_rho(), g.resolution(), rho);
  System s;
  s.unknown_index.assign(g.size(), -1);
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!ball.masked(i) || !stencil_inside(g, i)) continue;
    bool ok = true;
    for (const auto& c : omega.components) ok = ok && c.defined(i);
    if (gauge) ok = ok && gauge->defined(i);
    if (!ok) continue;
    s.eq_points.push_back(i);
  }
  auto add_unknown = [&](std::size_t q) {
    if (s.unknown_index[q] < 0) {
      s.unknown_index[q] = static_cast<long long>(s.unknown_points.size());
      s.unknown_points.push_back(q);
    }
  };
  for (std::size_t p : s.eq_points) {
    add_unknown(p);
    for (int a = 0; a < g.dims(); ++a) {
      add_unknown(*g.neighbor(p, a, -1));
      add_unknown(*g.neighbor(p, a, 1));
    }
  }
  std::vector<Eigen::VectorXcd> coeff;
  for (int al = 1; al <= m; ++al) coeff.push_back(frame.xbar_coefficients(g, al));

  const Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(r, r);
  auto gauge_at = [&](std::size_t q) -> Eigen::MatrixXcd { return gauge ? Eigen::MatrixXcd(gauge->at(q)) : id; };

  std::vector<Triplet> trips;
  trips.reserve(s.eq_points.size() * m * r * r * 7);
  const int xaxis = g.dims() - 1;
  for (std::size_t e = 0; e < s.eq_points.size(); ++e) {
    const std::size_t p = s.eq_points[e];
    const long long up = s.unknown_index[p];
    for (int al = 1; al <= m; ++al) {
      const int u = 2 * (al - 1);
      const std::array<std::pair<int, Complex>, 3> axes{
          {{u, 0.5}, {u + 1, 0.5 * kI}, {xaxis, coeff[al - 1](static_cast<Eigen::Index>(p))}}};
      const Eigen::Index row0 = static_cast<Eigen::Index>((e * m + (al - 1)) * r);
      Eigen::MatrixXcd centre = Eigen::MatrixXcd::Zero(r, r);
      for (const auto& [axis, w] : axes) {
        const std::size_t lo = *g.neighbor(p, axis, -1);
        const std::size_t hi = *g.neighbor(p, axis, 1);
        const Complex f = w / (2.0 * g.spacing(axis));
        const Eigen::MatrixXcd ghi = gauge_at(hi);
        const Eigen::MatrixXcd glo = gauge_at(lo);
        const long long uhi = s.unknown_index[hi];
        const long long ulo = s.unknown_index[lo];
        // output_k += sum_j b(q)_j G(q)_{jk} * (+-f)
        for (int j = 0; j < r; ++j)
          for (int k = 0; k < r; ++k) {
            if (ghi(j, k) != 0.0)
              trips.emplace_back(row0 + k, static_cast<Eigen::Index>(uhi * r + j), f * ghi(j, k));
            if (glo(j, k) != 0.0)
              trips.emplace_back(row0 + k, static_cast<Eigen::Index>(ulo * r + j), -f * glo(j, k));
          }
        if (gauge) centre -= f * (ghi - glo);
      }
      if (gauge)
        for (int j = 0; j < r; ++j)
          for (int k = 0; k < r; ++k)
            if (centre(j, k) != 0.0)
              trips.emplace_back(row0 + k, static_cast<Eigen::Index>(up * r + j), centre(j, k));
    }
  }
  s.m.resize(static_cast<Eigen::Index>(s.eq_points.size() * m * r),
             static_cast<Eigen::Index>(s.unknown_points.size() * r));
  s.m.setFromTriplets(trips.begin(), trips.end());
  s.m.makeCompressed();
  return s;
}


// Real monomials of total degree <= d in the normalized lattice coordinates.
std::vector<std::vector<int>> ansatz_exponents(int dims, int d) {
  std::vector<std::vector<int>> out;
  std::vector<int> e(dims, 0);
  std::function<void(int, int)> rec = [&](int axis, int left) {
    if (axis == dims) {
      out.push_back(e);
      return;
    }
    for (int p = 0; p <= left; ++p) {
      e[axis] = p;
      rec(axis + 1, left - p);
    }
    e[axis] = 0;
  };
  rec(0, d);
  return out;
}

Eigen::VectorXd ansatz_values(const GridChart& g, std::size_t q,
                              const std::vector<std::vector<int>>& exps) {
  const int dims = g.dims();
  std::vector<double> t(dims);
  for (int a = 0; a < dims; ++a) t[a] = g.normalized(g.index_along(q, a));
  Eigen::VectorXd v(static_cast<Eigen::Index>(exps.size()));
  for (std::size_t k = 0; k < exps.size(); ++k) {
    double x = 1.0;
    for (int a = 0; a < dims; ++a)
      for (int p = 0; p < exps[k][a]; ++p) x *= t[a];
    v(static_cast<Eigen::Index>(k)) = x;
  }
  return v;
}

struct AnsatzSolution {
  Eigen::MatrixXcd coef;  // (basis * r) x r, row (k, i) column l: C_{l i} coefficient of phi_k
  Eigen::MatrixXcd x;     // grid unknowns of the sparse system
  int rank = 0;
};

// Columns of the dense system are L applied to B = (phi_k e_i^T) G^{-1}, one row of B.
AnsatzSolution ansatz_solve(const System& sys, const GridChart& g, const MatrixField* gauge, int r,
                            const Eigen::MatrixXcd& rhs, const SolverConfig& cfg) {
  require(cfg.ansatz_degree >= 0, "ansatz degree must be non-negative");
  const auto exps = ansatz_exponents(g.dims(), cfg.ansatz_degree);
  const Eigen::Index nb = static_cast<Eigen::Index>(exps.size());
  const Eigen::Index nunk = static_cast<Eigen::Index>(sys.unknown_points.size());
  Eigen::MatrixXcd t = Eigen::MatrixXcd::Zero(nunk * r, nb * r);
  for (Eigen::Index q = 0; q < nunk; ++q) {
    const std::size_t p = sys.unknown_points[static_cast<std::size_t>(q)];
    const Eigen::VectorXd phi = ansatz_values(g, p, exps);
    const Eigen::MatrixXcd gi = gauge ? Eigen::MatrixXcd(Eigen::MatrixXcd(gauge->at(p)).inverse())
                                      : Eigen::MatrixXcd::Identity(r, r);
    for (Eigen::Index k = 0; k < nb; ++k)
      for (int i = 0; i < r; ++i)
        for (int j = 0; j < r; ++j) t(q * r + j, k * r + i) = phi(k) * gi(i, j);
  }
  // The basis is O(1) on the box, so coefficient size tracks the size of B;
  // no column equilibration (it would inflate near-kernel directions).
  const Eigen::MatrixXcd d = sys.m * t;
  AnsatzSolution out;
  const Eigen::Index nc = d.cols();
  if (d.rows() < nc) throw Error(ErrorKind::InvalidArgument, "ansatz has more unknowns than equations");
  Eigen::HouseholderQR<Eigen::MatrixXcd> qr(d);
  const Eigen::MatrixXcd qtb = (qr.householderQ().adjoint() * rhs).topRows(nc);
  const Eigen::MatrixXcd rf = qr.matrixQR().topRows(nc).triangularView<Eigen::Upper>();
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXcd> cod;
  cod.setThreshold(cfg.rank_tol);
  cod.compute(rf);
  out.rank = static_cast<int>(cod.rank());
  out.coef = cod.solve(qtb);
  out.x = t * out.coef;
  return out;
}

}  // namespace

SolverBackend solver_backend_from_string(const std::string& s) {
  if (s == "ansatz") return SolverBackend::Ansatz;
  if (s == "direct") return SolverBackend::Direct;
  if (s == "iterative") return SolverBackend::Iterative;
  throw Error(ErrorKind::InvalidArgument, "unknown solver backend: " + s);
}

std::string to_string(SolverBackend b) {
  switch (b) {
    case SolverBackend::Ansatz: return "ansatz";
    case SolverBackend::Direct: return "direct";
    case SolverBackend::Iterative: return "iterative";
  }
  return "ansatz";
}

std::string SolverReport::csv_row() const {
  std::ostringstream os;
  os << std::setprecision(17) << rho << "," << sigma << "," << k << "," << eta_hat << ","
     << residual << "," << iters;
  return os.str();
}

ConnectionForm solver_residual(const ConnectionForm& omega, const MatrixField& b,
                               const TangentialFrame& frame, const MatrixField* gauge) {
  const MatrixField bg = grid_only(b);
  ConnectionForm out;
  if (!gauge) {
    const ConnectionForm d = dbar_matrix(bg, frame);
    for (int a = 0; a < omega.m(); ++a) out.components.push_back(grid_only(d.components[a] + omega.components[a]));
    return out;
  }
  const MatrixField g = grid_only(*gauge);
  const ConnectionForm dbg = dbar_matrix(bg * g, frame);
  const ConnectionForm dg = dbar_matrix(g, frame);
  for (int a = 0; a < omega.m(); ++a)
    out.components.push_back(
        grid_only(dbg.components[a] - bg * dg.components[a] + omega.components[a]));
  return out;
}

SolveResult solve_P(const ConnectionForm& omega, double rho, double sigma, const SolverConfig& cfg,
                    const TangentialFrame& frame, const MatrixField* gauge) {
  require(rho > 0.0 && rho <= omega.chart().lattice_rho() * (1.0 + 1e-12), "radius outside the lattice");
  require(sigma >= 0.0 && sigma < 1.0, "sigma must lie in [0, 1)");
  if (gauge) require(gauge->chart().same_lattice(omega.chart()) && gauge->rank() == omega.rank(),
                     "frame gauge does not match the form");
  const GridChart& g = omega.chart();
  const int m = omega.m();
  const int r = omega.rank();
  const double lambda = cfg.lambda >= 0.0 ? cfg.lambda : 1e-8 * cell_volume(g);

  System sys = assemble(omega, rho, frame, gauge);
  const Eigen::Index neq = sys.m.rows();
  const Eigen::Index nunk = sys.m.cols();

  // One right-hand side per row l of B: entries -omega_alpha(p)_{l,k}.
  Eigen::MatrixXcd rhs(neq, r);
  for (std::size_t e = 0; e < sys.eq_points.size(); ++e)
    for (int a = 0; a < m; ++a) {
      const auto w = omega.components[a].at(sys.eq_points[e]);
      for (int k = 0; k < r; ++k)
        for (int l = 0; l < r; ++l)
          rhs(static_cast<Eigen::Index>((e * m + a) * r + k), l) = -w(l, k);
    }

  SolveResult res{MatrixField(omega.chart_ptr(), r), {}};
  res.report.rho = rho;
  res.report.sigma = sigma;
  res.report.lambda = lambda;
  Eigen::MatrixXcd x = Eigen::MatrixXcd::Zero(nunk, r);
  bool failed = false;
  std::optional<AnsatzSolution> ans;
  if (nunk > 0 && rhs.norm() > 0.0) {
    if (cfg.backend == SolverBackend::Ansatz) {
      ans = ansatz_solve(sys, g, gauge, r, rhs, cfg);
      x = ans->x;
      res.report.iters = 1;
      res.report.lambda = 0.0;
      res.report.note = "ansatz rank " + std::to_string(ans->rank);
    } else if (cfg.backend == SolverBackend::Direct) {
      SpMat normal = SpMat(sys.m.adjoint()) * sys.m;
      if (lambda > 0.0) {
        SpMat reg(nunk, nunk);
        reg.setIdentity();
        normal += lambda * reg;
      }
      Eigen::SimplicialLDLT<SpMat> ldlt(normal);
      if (ldlt.info() != Eigen::Success)
        throw Error(ErrorKind::SolverFailure, "direct factorization failed");
      const double dmax = ldlt.vectorD().cwiseAbs().maxCoeff();
      if (lambda == 0.0 && ldlt.vectorD().cwiseAbs().minCoeff() <= 1e-12 * dmax)
        throw Error(ErrorKind::NonUniqueSolution, "lambda = 0 and the discrete dbar system is rank deficient");
      x = ldlt.solve(Eigen::MatrixXcd(sys.m.adjoint() * rhs));
      res.report.iters = 1;
    } else {
      SpMat aug(neq + nunk, nunk);
      {
        std::vector<Triplet> t;
        t.reserve(sys.m.nonZeros() + nunk);
        for (Eigen::Index c = 0; c < sys.m.outerSize(); ++c)
          for (SpMat::InnerIterator it(sys.m, c); it; ++it) t.emplace_back(it.row(), it.col(), it.value());
        const double sl = std::sqrt(lambda);
        if (sl > 0.0)
          for (Eigen::Index c = 0; c < nunk; ++c) t.emplace_back(neq + c, c, sl);
        aug.setFromTriplets(t.begin(), t.end());
      }
      Eigen::MatrixXcd arhs = Eigen::MatrixXcd::Zero(neq + nunk, r);
      arhs.topRows(neq) = rhs;
      Eigen::LeastSquaresConjugateGradient<SpMat> lscg;
      lscg.setTolerance(cfg.residual_tol);
      lscg.setMaxIterations(cfg.max_iterations);
      lscg.compute(aug);
      for (int l = 0; l < r; ++l) {
        if (arhs.col(l).norm() == 0.0) continue;
        x.col(l) = lscg.solve(arhs.col(l));
        res.report.iters = std::max(res.report.iters, static_cast<int>(lscg.iterations()));
        if (lscg.info() != Eigen::Success) failed = true;
      }
    }
  }
  for (std::size_t q = 0; q < sys.unknown_points.size(); ++q)
    for (int l = 0; l < r; ++l)
      for (int j = 0; j < r; ++j)
        res.b.at(sys.unknown_points[q])(l, j) = x(static_cast<Eigen::Index>(q * r + j), l);
  if (ans) {
    // B = C G^{-1} on the whole lattice.
    const auto exps = ansatz_exponents(g.dims(), cfg.ansatz_degree);
    for (std::size_t q = 0; q < g.size(); ++q) {
      if (gauge && !gauge->defined(q)) continue;
      const Eigen::VectorXd phi = ansatz_values(g, q, exps);
      Eigen::MatrixXcd c = Eigen::MatrixXcd::Zero(r, r);
      for (Eigen::Index k = 0; k < phi.size(); ++k)
        for (int i = 0; i < r; ++i)
          for (int l = 0; l < r; ++l) c(l, i) += phi(k) * ans->coef(k * r + i, l);
      res.b.at(q) = gauge ? Eigen::MatrixXcd(c * Eigen::MatrixXcd(gauge->at(q)).inverse()) : c;
      res.b.set_defined(q, true);
    }
  }

  // Report on the target ball.
  const double target = rho * (1.0 - sigma);
  const GridChart tball(g.n(), g.lattice_rho(), g.resolution(), target);
  Eigen::MatrixXcd out = sys.m * x - rhs;  // L(B) + omega in row layout
  double resid = 0.0;
  for (std::size_t e = 0; e < sys.eq_points.size(); ++e) {
    if (!tball.masked(sys.eq_points[e])) continue;
    for (int a = 0; a < m; ++a) {
      Eigen::MatrixXcd blk(r, r);
      for (int k = 0; k < r; ++k)
        for (int l = 0; l < r; ++l) blk(l, k) = out(static_cast<Eigen::Index>((e * m + a) * r + k), l);
      resid = std::max(resid, spectral_norm(blk));
    }
  }
  res.report.residual = resid;
  const double wn = ck_norm(omega, rho, 0).value;
  res.report.eta_hat = wn > 0.0 ? ck_norm(res.b, target, 0).value / wn : 0.0;
  if (failed) {
    res.report.note = "iterative solver stopped at max_iterations";
    if (cfg.max_iterations > 0)
      throw SolverFailure("iterative solver did not reach residual_tol", res);
  }
  return res;
}

SolveResult solve_P_scaled(const ConnectionForm& omega, double rho, double sigma,
                           const SolverConfig& cfg, const TangentialFrame& frame,
                           const MatrixField* gauge) {
  if (!frame.is_heisenberg()) {
    SolveResult r = solve_P(omega, rho, sigma, cfg, frame, gauge);
    r.report.note = "non-Heisenberg surface: unscaled solve";
    return r;
  }
  require(rho > 0.0, "radius must be positive");
  // Unit chart: lattice_rho / rho, mask rho / rho = 1.
  const ConnectionForm unit = pullback_form(omega, rho);
  std::optional<MatrixField> ug;
  if (gauge) ug = pullback_field(*gauge, rho);
  SolveResult r = solve_P(unit, 1.0, sigma, cfg, frame, ug ? &*ug : nullptr);
  r.b = pullback_field(r.b, 1.0 / rho, omega.chart_ptr());
  r.report.rho = rho;
  return r;
}

ProbeStats operator_norm_probe(const SolverConfig& cfg, const ChartPtr& chart, double rho,
                               double sigma, int k, int trials, std::uint64_t seed, int rank) {
  require(trials >= 1, "trials must be positive");
  const TangentialFrame frame(DefiningSurface::heisenberg(chart->n()));
  std::mt19937_64 rng(seed);
  ProbeStats st;
  const int m = chart->n() - 1;
  for (int t = 0; t < trials; ++t) {
    PolyForm pf;
    for (int a = 0; a < m; ++a) pf.push_back(random_polynomial(m, rank, 0, 2, rng, 1.0));
    const ConnectionForm w = ConnectionForm::sample(chart, pf);
    const SolveResult s = solve_P(w, rho, sigma, cfg, frame);
    const double wn = ck_norm(w, rho, k).value;
    const double ratio = wn > 0.0 ? ck_norm(s.b, rho * (1.0 - sigma), k).value / wn : 0.0;
    st.samples.push_back(ratio);
    st.max = std::max(st.max, ratio);
    st.mean += ratio / trials;
  }
  return st;
}

}  // namespace crvb
