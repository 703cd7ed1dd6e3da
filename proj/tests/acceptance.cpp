// Property checks at desk scale. One PASS/FAIL line per criterion; exit status
// is the number of failures.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>

#include "crvb/error.hpp"
#include "crvb/harness.hpp"

using namespace crvb;

namespace {

int failures = 0;

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

void report(int id, bool ok, const std::string& detail) {
  std::printf("criterion %2d: %s  %s\n", id, ok ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

// Runs a check, turning exceptions into a FAIL line.
void criterion(int id, const std::function<bool(std::string&)>& body) {
  std::string detail;
  bool ok = false;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    ok = body(detail);
  } catch (const std::exception& e) {
    detail += std::string(" exception: ") + e.what();
  }
  const double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  report(id, ok, detail + fmt(" [%.1f s]", sec));
}

ChartPtr chart(int n, double rho, int res) { return std::make_shared<GridChart>(build_grid(n, rho, res)); }

MatrixField grid_only(MatrixField f) {
  f.drop_polynomial();
  return f;
}

double max_active(const MatrixField& f) {
  double v = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i)
    if (f.active(i)) v = std::max(v, f.at(i).norm());
  return v;
}

Eigen::MatrixXcd random_matrix(std::mt19937_64& rng, int r) {
  std::normal_distribution<double> g;
  Eigen::MatrixXcd s(r, r);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < r; ++j) s(i, j) = Complex(g(rng), g(rng));
  return s;
}

struct MainRun {
  RunConfig cfg;
  Problem problem;
  RunResult result;
  Diagnostics diag;
  double seconds = 0.0;
};

MainRun main_run() {
  MainRun m;
  m.cfg.engine.holder_pairs = 20000;
  m.problem = manufacture_problem(m.cfg.problem);
  const TangentialFrame frame(DefiningSurface::heisenberg(m.cfg.problem.n));
  const auto t0 = std::chrono::steady_clock::now();
  m.result = run(m.problem.omega0, m.cfg.engine, frame);
  m.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  m.diag = convergence_diagnostics(m.result.trace);
  return m;
}

int applied_steps(const IterationTrace& t) {
  int s = 0;
  for (const auto& r : t.rows) s += r.applied ? 1 : 0;
  return s;
}

}  // namespace

int main() {
  std::printf("manufactured run: n=3 r=2 resolution 9 amplitude 1e-2, taylor order 1, k=1\n");
  std::fflush(stdout);
  MainRun m;
  std::string run_error;
  try {
    m = main_run();
  } catch (const std::exception& e) {
    run_error = e.what();
  }
  const bool have_run = run_error.empty();
  const auto& rows = m.result.trace.rows;

  criterion(1, [&](std::string& d) {
    if (!have_run) {
      d = "run failed: " + run_error;
      return false;
    }
    const double rel = m.result.final_residual / m.result.omega0_norm;
    const int steps = applied_steps(m.result.trace);
    d = "residual/||omega0|| = " + fmt("%.3e", rel) + ", steps " + std::to_string(steps) + ", " +
        fmt("%.1f s", m.seconds);
    return m.result.converged && rel <= 1e-6 && steps <= 8 && m.seconds <= 600.0;
  });

  criterion(2, [&](std::string& d) {
    if (!have_run) return false;
    bool decreasing = true;
    for (std::size_t j = 1; j < rows.size(); ++j) decreasing = decreasing && rows[j].delta[0] < rows[j - 1].delta[0];
    d = "p_hat = " + fmt("%.3f", m.diag.p_hat) + " over " + std::to_string(m.diag.p_steps) + " pair(s), contraction " +
        (m.diag.contraction ? "holds" : "violated");
    return decreasing && m.diag.p_steps >= 1 && m.diag.quadratic && m.diag.contraction;
  });

  criterion(3, [&](std::string& d) {
    if (!have_run) return false;
    d = "zeta:";
    for (const auto& r : rows) d += fmt(" %.3g", r.zeta_j);
    d += ", chain from j = " + std::to_string(m.diag.zeta_start);
    return m.diag.zeta_start == 0 && m.diag.zeta_chain;
  });

  criterion(4, [&](std::string& d) {
    double worst = 0.0;
    for (int n : {3, 4})
      for (Generator g : {Generator::ExpPolynomial, Generator::Nilpotent})
        for (std::uint64_t seed : {1u, 2u, 3u}) {
          ProblemSpec s;
          s.n = n;
          s.resolution = 5;
          s.generator = g;
          s.seed = seed;
          const Problem p = manufacture_problem(s);
          worst = std::max(worst, max_norm(integrability_residual(p.omega0, TangentialFrame(DefiningSurface::heisenberg(n)))));
        }
    std::mt19937_64 rng(3);
    const Eigen::MatrixXcd s1 = random_matrix(rng, 2), s2 = random_matrix(rng, 2);
    const Eigen::MatrixXcd want = -(s1 * s2 - s2 * s1);
    const ChartPtr c = chart(3, 1.0, 5);
    const TwoForm r = integrability_residual(
        ConnectionForm::sample(c, {MatrixPolynomial::constant(2, s1), MatrixPolynomial::constant(2, s2)}),
        TangentialFrame(DefiningSurface::heisenberg(3)));
    double dev = 0.0;
    for (std::size_t i = 0; i < c->size(); ++i)
      if (r.at(1, 2).active(i)) dev = std::max(dev, (r.at(1, 2).at(i) - want).norm());
    d = "manufactured max residual " + fmt("%.2e", worst) + ", |R - (-[S1,S2])| " + fmt("%.2e", dev);
    return worst <= 1e-12 && dev <= 1e-14 * want.norm();
  });

  criterion(5, [&](std::string& d) {
    const TangentialFrame frame(DefiningSurface::heisenberg(3));
    const ChartPtr coarse = chart(3, 1.0, 5), fine = chart(3, 1.0, 9);
    bool ok = true;
    double exact_err = 0.0, rmin = 1e300, rmax = 0.0;
    for (int deg = 0; deg <= 4; ++deg) {
      std::mt19937_64 rng(40 + deg);
      const MatrixPolynomial p = random_polynomial(2, 1, deg, deg, rng, 1.0);
      for (int a = 1; a <= 2; ++a) {
        double err[2];
        int slot = 0;
        for (const ChartPtr& c : {coarse, fine}) {
          const MatrixField f = MatrixField::sample(c, p);
          const MatrixField e = apply_xbar(grid_only(f), a, frame) - apply_xbar(f, a, frame);
          const int stride = c == coarse ? 1 : 2;
          double v = 0.0;
          for (std::size_t i = 0; i < coarse->size(); ++i) {
            if (!coarse->masked(i)) continue;
            std::size_t j = 0;
            for (int ax = 0; ax < 5; ++ax)
              j += static_cast<std::size_t>(coarse->index_along(i, ax) * stride) * c->stride(ax);
            if (e.defined(j)) v = std::max(v, e.at(j).norm());
          }
          err[slot++] = v;
        }
        if (deg <= 2) {
          exact_err = std::max(exact_err, std::max(err[0], err[1]));
        } else {
          const double ratio = err[0] / err[1];
          rmin = std::min(rmin, ratio);
          rmax = std::max(rmax, ratio);
          ok = ok && std::abs(ratio - 4.0) <= 0.8;
        }
      }
    }
    ok = ok && exact_err <= 1e-12;
    const Eigen::MatrixXcd one = Eigen::MatrixXcd::Identity(1, 1);
    bool holo = true;
    for (int deg = 0; deg <= 4; ++deg)
      for (const auto& e : exponents_of(2, deg, false)) {
        if (e[2] || e[3] || e[4]) continue;
        const MatrixPolynomial q = MatrixPolynomial::monomial(2, e, one);
        for (int a = 1; a <= 2; ++a) holo = holo && q.xbar(a).is_zero();
      }
    d = "Richardson ratios in [" + fmt("%.3f", rmin) + ", " + fmt("%.3f", rmax) + "], degree<=2 error " +
        fmt("%.1e", exact_err) + ", holomorphic " + (holo ? "exact" : "not annihilated");
    return ok && holo;
  });

  criterion(6, [&](std::string& d) {
    ProblemSpec s;
    s.resolution = 5;
    const Problem p = manufacture_problem(s);
    const TangentialFrame frame(DefiningSurface::heisenberg(3));
    const double scale = max_taylor_jet(p.omega0.exact->taylor(2), 2);
    double worst = 0.0, sym = 0.0;
    for (JetMode mode : {JetMode::Ordinary, JetMode::Weighted}) {
      const NormalizationResult r = normalize_to_order(p.omega0, 2, mode, frame);
      for (const auto& st : r.stages) sym = std::max(sym, st.symmetry_defect);
      const auto& ex = *r.omega.exact;
      // finite-difference fit of the pointwise values near 0
      const PolyForm fit = fit_jet([&](const Eigen::VectorXd& x) { return ex.evaluate(x); }, 2, 2, 4, 0.005);
      const double jets = mode == JetMode::Ordinary ? max_taylor_jet(fit, 2) : max_fs_jet(fit, 2);
      worst = std::max(worst, jets / scale);
    }
    d = "max FD jet (order/weight <= 2) relative " + fmt("%.2e", worst) + ", symmetry defect " + fmt("%.2e", sym);
    return worst <= 1e-8 && sym <= 1e-11;
  });

  criterion(7, [&](std::string& d) {
    const TangentialFrame frame(DefiningSurface::heisenberg(3));
    const ChartPtr unit = chart(3, 1.0, 5);
    std::mt19937_64 rng(7);
    const ConnectionForm w = ConnectionForm::sample(
        unit, {random_polynomial(2, 2, 0, 1, rng, 1.0), random_polynomial(2, 2, 0, 1, rng, 1.0)});
    const SolverConfig cfg;
    const SolveResult ref = solve_P(w, 1.0, 0.5, cfg, frame);
    const double scale = max_active(ref.b);
    double conj = 0.0;
    for (double rho : {0.25, 1.0 / 16}) {
      // P_rho(T*_{1/rho} w) against T*_{1/rho} P_1(w), and P_rho computed directly on D_rho
      const ConnectionForm w_rho = pullback_form(w, 1.0 / rho);
      const SolveResult sc = solve_P_scaled(w_rho, rho, 0.5, cfg, frame);
      const SolveResult direct = solve_P(w_rho, rho, 0.5, cfg, frame);
      const MatrixField back = pullback_field(sc.b, rho, unit);
      for (std::size_t i = 0; i < unit->size(); ++i) {
        if (!unit->masked(i) || !ref.b.defined(i)) continue;
        conj = std::max(conj, (sc.b.at(i) - ref.b.at(i)).norm());
        conj = std::max(conj, (direct.b.at(i) - ref.b.at(i)).norm());
        if (back.defined(i)) conj = std::max(conj, (back.at(i) - ref.b.at(i)).norm());
      }
    }
    conj /= scale;

    const Eigen::MatrixXcd s1 = random_matrix(rng, 2), s2 = random_matrix(rng, 2);
    const ConnectionForm cst =
        ConnectionForm::sample(unit, {MatrixPolynomial::constant(2, s1), MatrixPolynomial::constant(2, s2)});
    const double c0 = ck_norm(cst, 1.0, 0).value;
    double pull = 0.0;
    for (double kappa : {0.25, 1.0 / 16}) {
      const ConnectionForm pb = pullback_form(cst, kappa, unit);
      pull = std::max(pull, std::abs(ck_norm(pb, 1.0, 0).value / c0 - std::sqrt(kappa)));
    }

    const ChartPtr c7 = chart(3, 1.0, 7);
    const PolyForm pf{random_polynomial(2, 2, 0, 2, rng, 1.0), random_polynomial(2, 2, 0, 2, rng, 1.0)};
    const ConnectionForm phi = ConnectionForm::sample(c7, pf);
    const double fs_ref = fs_norm(phi, 1.0, 1, 0.5, frame, 1 << 30, 1).value;
    double fs = 0.0;
    for (double rho : {0.25, 1.0 / 16}) {
      const double v = scaled_fs_norm(pullback_form(phi, 1.0 / rho), rho, 1, 0.5, frame, 1 << 30, 1).value;
      fs = std::max(fs, std::abs(v - fs_ref) / fs_ref);
    }
    d = "conjugation " + fmt("%.1e", conj) + ", constant pullback " + fmt("%.1e", pull) + ", scaled FS " +
        fmt("%.1e", fs);
    return conj <= 1e-12 && pull <= 1e-12 && fs <= 1e-12;
  });

  criterion(8, [&](std::string& d) {
    const NormConstants k0 = submultiplicativity_constant(0, 100, 1, 3, 2, 7);
    const NormConstants k1 = submultiplicativity_constant(1, 100, 1, 3, 2, 7);
    bool ok = k0.trials == 100 && k1.trials == 100 && k0.measured <= k0.c_tilde && k1.measured <= k1.c_tilde;
    const ChartPtr c = chart(3, 1.0, 7);
    std::mt19937_64 rng(8);
    MatrixField base = grid_only(MatrixField::sample(c, random_polynomial(2, 2, 0, 2, rng, 1.0)));
    const double nb = ck_norm(base, 1.0, 0).value;
    std::string nd;
    for (double t : {0.1, 0.25, 0.4}) {
      const NeumannCheck r = neumann_check(Complex(t / (k0.c_tilde * nb)) * base, 1.0, k0.c_tilde);
      ok = ok && r.holds;
      nd += fmt(" %.3f", r.norm_inverse) + "<=" + fmt("%.3f", r.bound);
    }
    d = "c0 measured " + fmt("%.3f", k0.measured) + ", c1 measured " + fmt("%.3f", k1.measured) + ", Neumann" + nd;
    return ok;
  });

  criterion(9, [&](std::string& d) {
    if (!have_run) return false;
    d = "delta^(1):";
    for (const auto& r : rows) d += fmt(" %.3g", r.delta[1]);
    d += ", j1 = " + std::to_string(m.diag.j1) + ", Holder ratio max " + fmt("%.3g", m.diag.holder_ratio_max) +
         " <= " + fmt("%.3g", m.diag.holder_constant);
    return m.result.converged && m.diag.j1 >= 0 && m.diag.j1 <= m.cfg.engine.jmax && m.diag.holder_bounded;
  });

  criterion(10, [&](std::string& d) {
    RunConfig cfg;
    cfg.problem.n = 4;
    cfg.problem.resolution = 5;
    cfg.engine.tol_relative = 1e-11;
    cfg.engine.holder_pairs = 2000;
    const Problem p = manufacture_problem(cfg.problem);
    const RunResult r = run(p.omega0, cfg.engine, TangentialFrame(DefiningSurface::heisenberg(4)));
    int run_len = 0, best = 0;
    d = "delta^(0):";
    for (std::size_t j = 0; j < r.trace.rows.size(); ++j) {
      d += fmt(" %.3g", r.trace.rows[j].delta[0]);
      run_len = j > 0 && r.trace.rows[j].delta[0] < r.trace.rows[j - 1].delta[0] ? run_len + 1 : 0;
      best = std::max(best, run_len);
    }
    return best >= 3;
  });

  std::printf("%d criterion(s) failed\n", failures);
  return failures;
}
