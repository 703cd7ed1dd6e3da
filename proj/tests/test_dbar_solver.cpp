#include <doctest.h>

#include <random>

#include "crvb/dbar_solver.hpp"
#include "crvb/error.hpp"
#include "crvb/norms.hpp"

using namespace crvb;

namespace {

ChartPtr chart(int n, double rho, int res) { return std::make_shared<GridChart>(build_grid(n, rho, res)); }

double max_active(const MatrixField& f, double rho) {
  double v = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i)
    if (f.defined(i) && in_heisenberg_ball(f.chart().point(i), rho)) v = std::max(v, f.at(i).norm());
  return v;
}

double max_active(const ConnectionForm& w, double rho) {
  double v = 0.0;
  for (const auto& c : w.components) v = std::max(v, max_active(c, rho));
  return v;
}

ConnectionForm random_form(const ChartPtr& c, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return ConnectionForm::sample(c, {random_polynomial(2, 2, 0, 1, rng, 1.0), random_polynomial(2, 2, 0, 1, rng, 1.0)});
}

}  // namespace

TEST_CASE("backend names") {
  for (SolverBackend b : {SolverBackend::Ansatz, SolverBackend::Direct, SolverBackend::Iterative})
    CHECK(solver_backend_from_string(to_string(b)) == b);
  CHECK_THROWS_AS(solver_backend_from_string("cholmod"), Error);
}

TEST_CASE("zero form gives zero correction") {
  const ChartPtr c = chart(3, 1.0, 5);
  const TangentialFrame frame(DefiningSurface::heisenberg(3));
  const ConnectionForm w = ConnectionForm::sample(c, {MatrixPolynomial(2, 2), MatrixPolynomial(2, 2)});
  const SolveResult r = solve_P(w, 1.0, 0.5, SolverConfig{}, frame);
  CHECK(max_active(r.b, 1.0) == 0.0);
  CHECK(r.report.residual == 0.0);
}

TEST_CASE("constant form is inverted exactly") {
  const ChartPtr c = chart(3, 1.0, 5);
  const TangentialFrame frame(DefiningSurface::heisenberg(3));
  const Eigen::MatrixXcd e12 = elementary(2, 1, 2);
  const ConnectionForm w = ConnectionForm::sample(c, {MatrixPolynomial::constant(2, -e12), MatrixPolynomial(2, 2)});
  const SolveResult r = solve_P(w, 1.0, 0.5, SolverConfig{}, frame);
  CHECK(r.report.residual <= 1e-12);
  // Xbar_1 B = E12 and Xbar_2 B = 0: B = E12 zbar^1 up to CR functions
  const MatrixField b = r.b;
  const MatrixField want = MatrixField::sample(c, MatrixPolynomial::zbar(2, 1, e12));
  const ConnectionForm res = solver_residual(w, b, frame);
  CHECK(max_active(res, 0.5) <= 1e-12);
  CHECK(max_active(b - want, 0.5) <= 1e-10);
  CHECK(r.report.eta_hat > 0.0);
}

TEST_CASE("grid backends agree with the ansatz on a constant form") {
  const ChartPtr c = chart(3, 1.0, 5);
  const TangentialFrame frame(DefiningSurface::heisenberg(3));
  const ConnectionForm w =
      ConnectionForm::sample(c, {MatrixPolynomial::constant(2, -elementary(2, 1, 2)), MatrixPolynomial(2, 2)});
  for (SolverBackend be : {SolverBackend::Direct, SolverBackend::Iterative}) {
    SolverConfig cfg;
    cfg.backend = be;
    const SolveResult r = solve_P(w, 1.0, 0.5, cfg, frame);
    // Tikhonov bias only
    CHECK(max_active(solver_residual(w, r.b, frame), 0.5) <= 1e-4);
  }
}

TEST_CASE("ansatz solve is linear") {
  const ChartPtr c = chart(3, 1.0, 5);
  const TangentialFrame frame(DefiningSurface::heisenberg(3));
  const ConnectionForm w1 = random_form(c, 1), w2 = random_form(c, 2);
  const SolverConfig cfg;
  const MatrixField b1 = solve_P(w1, 1.0, 0.5, cfg, frame).b;
  const MatrixField b2 = solve_P(w2, 1.0, 0.5, cfg, frame).b;
  const MatrixField b = solve_P(Complex(2.0, -1.0) * w1 + w2, 1.0, 0.5, cfg, frame).b;
  const double scale = max_active(b, 1.0);
  REQUIRE(scale > 0.0);
  CHECK(max_active(b - (Complex(2.0, -1.0) * b1 + b2), 1.0) <= 1e-12 * scale);
}

TEST_CASE("scaled solve commutes with dilation") {
  const ChartPtr unit = chart(3, 1.0, 5);
  const TangentialFrame frame(DefiningSurface::heisenberg(3));
  const ConnectionForm w = random_form(unit, 7);
  const SolverConfig cfg;
  const SolveResult ref = solve_P(w, 1.0, 0.5, cfg, frame);
  const double scale = max_active(ref.b, 1.0);
  for (double rho : {0.25, 1.0 / 16}) {
    const ConnectionForm w_rho = pullback_form(w, 1.0 / rho);
    const SolveResult s = solve_P_scaled(w_rho, rho, 0.5, cfg, frame);
    const SolveResult d = solve_P(w_rho, rho, 0.5, cfg, frame);
    double v = 0.0, u = 0.0;
    for (std::size_t i = 0; i < unit->size(); ++i) {
      if (!unit->masked(i) || !ref.b.defined(i)) continue;
      v = std::max(v, (s.b.at(i) - ref.b.at(i)).norm());
      u = std::max(u, (d.b.at(i) - ref.b.at(i)).norm());
    }
    CHECK(v <= 1e-12 * scale);
    CHECK(u <= 1e-12 * scale);
    // the raw sup norm of w_rho carries a factor rho^{-1/2}
    CHECK(s.report.eta_hat == doctest::Approx(ref.report.eta_hat).epsilon(1e-10));
    CHECK(d.report.eta_hat == doctest::Approx(std::sqrt(rho) * ref.report.eta_hat).epsilon(1e-10));
  }
}

TEST_CASE("operator norm probe") {
  const ChartPtr c = chart(3, 1.0, 5);
  const ProbeStats p = operator_norm_probe(SolverConfig{}, c, 1.0, 0.5, 0, 4, 3);
  CHECK(p.samples.size() == 4u);
  CHECK(p.max >= p.mean);
  CHECK(p.mean > 0.0);
  CHECK(std::isfinite(p.max));
}

TEST_CASE("report rows") {
  SolverReport r;
  r.rho = 0.5;
  r.k = 1;
  CHECK(SolverReport::csv_header() == "rho,sigma,k,eta_hat,residual,iters");
  CHECK(r.csv_row().rfind("0.5", 0) == 0);
}

TEST_CASE("smaller margin gives a larger measured norm") {
  const ChartPtr c = chart(3, 1.0, 5);
  const TangentialFrame frame(DefiningSurface::heisenberg(3));
  const ConnectionForm w = random_form(c, 11);
  const double half = solve_P(w, 1.0, 0.5, SolverConfig{}, frame).report.eta_hat;
  const double quarter = solve_P(w, 1.0, 0.25, SolverConfig{}, frame).report.eta_hat;
  CHECK(quarter >= half);
}

TEST_CASE("block diagonal forms decouple") {
  const ChartPtr c = chart(3, 1.0, 5);
  const TangentialFrame frame(DefiningSurface::heisenberg(3));
  std::mt19937_64 rng(12);
  const MatrixPolynomial p1 = random_polynomial(2, 1, 0, 1, rng, 1.0), p2 = random_polynomial(2, 1, 0, 1, rng, 1.0);
  // embed the scalar form as the (1,1) entry of a rank 2 form
  auto embed = [](const MatrixPolynomial& p) {
    MatrixPolynomial q(2, 2);
    for (const auto& [e, v] : p.terms()) {
      Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(2, 2);
      m(0, 0) = v(0, 0);
      q.add_term(e, m);
    }
    return q;
  };
  const SolveResult one = solve_P(ConnectionForm::sample(c, {p1, p2}), 1.0, 0.5, SolverConfig{}, frame);
  const SolveResult two =
      solve_P(ConnectionForm::sample(c, {embed(p1), embed(p2)}), 1.0, 0.5, SolverConfig{}, frame);
  CHECK(two.report.eta_hat == doctest::Approx(one.report.eta_hat).epsilon(1e-12));
  double off = 0.0, diag = 0.0;
  for (std::size_t i = 0; i < c->size(); ++i) {
    if (!two.b.active(i)) continue;
    off = std::max({off, std::abs(two.b.at(i)(0, 1)), std::abs(two.b.at(i)(1, 0)), std::abs(two.b.at(i)(1, 1))});
    diag = std::max(diag, std::abs(two.b.at(i)(0, 0) - one.b.at(i)(0, 0)));
  }
  CHECK(off <= 1e-14);
  CHECK(diag <= 1e-12);
}
