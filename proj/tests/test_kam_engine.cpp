#include <doctest.h>

#include <cmath>
#include <random>

#include "crvb/error.hpp"
#include "crvb/kam_engine.hpp"

using namespace crvb;

namespace {

ChartPtr chart(int n, double rho, int res) { return std::make_shared<GridChart>(build_grid(n, rho, res)); }

IterationTrace fake_trace(const std::vector<double>& deltas) {
  IterationTrace t;
  t.k = 0;
  for (std::size_t j = 0; j < deltas.size(); ++j) {
    TraceRow r;
    r.j = static_cast<int>(j);
    r.delta = {deltas[j]};
    r.eta_hat = 1.0;
    r.zeta_j = 0.4;
    t.rows.push_back(r);
  }
  return t;
}

}  // namespace

TEST_CASE("normalization mode names") {
  for (NormalizationMode m :
       {NormalizationMode::Taylor, NormalizationMode::FS, NormalizationMode::Dilation, NormalizationMode::None})
    CHECK(normalization_mode_from_string(to_string(m)) == m);
  CHECK_THROWS_AS(normalization_mode_from_string("bogus"), Error);
}

TEST_CASE("flat input stops at once with the identity gauge") {
  const ChartPtr c = chart(3, 1.0, 5);
  const TangentialFrame frame(DefiningSurface::heisenberg(3));
  const ConnectionForm w = ConnectionForm::sample(c, {MatrixPolynomial(2, 2), MatrixPolynomial(2, 2)});
  const RunResult r = run(w, EngineConfig{}, frame);
  CHECK(r.converged);
  CHECK(r.final_residual == 0.0);
  double v = 0.0;
  for (std::size_t i = 0; i < c->size(); ++i)
    if (r.g.active(i)) v = std::max(v, (r.g.at(i) - Eigen::MatrixXcd::Identity(2, 2)).norm());
  CHECK(v == 0.0);
}

TEST_CASE("a multiple of E12 dzbar^1 is flattened in one step without normalization") {
  const ChartPtr c = chart(3, 1.0, 5);
  const TangentialFrame frame(DefiningSurface::heisenberg(3));
  const ConnectionForm w = ConnectionForm::sample(
      c, {MatrixPolynomial::constant(2, -0.2 * elementary(2, 1, 2)), MatrixPolynomial(2, 2)});
  EngineConfig cfg;
  cfg.normalization = NormalizationMode::None;
  const RunResult r = run(w, cfg, frame);
  CHECK(r.converged);
  CHECK(r.final_residual <= 1e-8);
  CHECK(r.trace.rows.size() <= 3u);
  CHECK(r.invertibility_margin == doctest::Approx(0.6));
  const VerifyReport v = verify_solution(r.omega0, r.g, frame, r.trace.rows.back().rho);
  CHECK(v.raw <= 1e-8);
  CHECK(v.normalized <= 1e-8);
  CHECK(r.min_singular > 0.5);
}

TEST_CASE("-E12 dzbar^1 exhausts the invertibility margin") {
  const ChartPtr c = chart(3, 1.0, 5);
  const TangentialFrame frame(DefiningSurface::heisenberg(3));
  const ConnectionForm w =
      ConnectionForm::sample(c, {MatrixPolynomial::constant(2, -elementary(2, 1, 2)), MatrixPolynomial(2, 2)});
  EngineConfig cfg;
  cfg.normalization = NormalizationMode::None;
  cfg.smallness = 2.0;  // ||E12 zbar^1||_{C^1} = 1
  try {
    run(w, cfg, frame);
    FAIL("expected an error");
  } catch (const Error& e) {
    // 1 - 2 ||B_1||_1 = -1
    CHECK(e.kind() == ErrorKind::FrameDegenerate);
  }
}

TEST_CASE("manufactured input converges with shrinking residuals") {
  const ChartPtr c = chart(3, 1.0, 7);
  const TangentialFrame frame(DefiningSurface::heisenberg(3));
  std::mt19937_64 rng(1);
  const MatrixPolynomial a = MatrixPolynomial::identity(2, 2) + 0.1 * random_polynomial(2, 2, 1, 2, rng, 1.0);
  const ConnectionForm w = sample_exact(c, std::make_shared<const ExactForm>(ExactForm::pure_gauge(a)));
  EngineConfig cfg;
  cfg.holder_pairs = 2000;
  const RunResult r = run(w, cfg, frame);
  CHECK(r.converged);
  REQUIRE(r.trace.rows.size() >= 2u);
  for (std::size_t j = 1; j < r.trace.rows.size(); ++j)
    CHECK(r.trace.rows[j].delta[0] < r.trace.rows[j - 1].delta[0]);
  CHECK(r.final_residual <= r.tol);
  CHECK(r.invertibility_margin > 0.0);
  const std::string csv = r.trace.csv();
  CHECK(csv.rfind(r.trace.csv_header(), 0) == 0);
  // identical input and configuration give the identical trace
  CHECK(run(w, cfg, frame).trace.csv() == csv);
}

TEST_CASE("smallness violation is reported") {
  const ChartPtr c = chart(3, 1.0, 5);
  const TangentialFrame frame(DefiningSurface::heisenberg(3));
  const ConnectionForm w =
      ConnectionForm::sample(c, {MatrixPolynomial::constant(2, -elementary(2, 1, 2)), MatrixPolynomial(2, 2)});
  EngineConfig cfg;
  cfg.normalization = NormalizationMode::None;
  cfg.smallness = 1e-3;
  cfg.max_restarts = 0;
  try {
    run(w, cfg, frame);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::SmallnessViolation);
  }
}

TEST_CASE("order estimate on synthetic traces") {
  // delta_j = 1e-10 2^{-j}: linear convergence, p close to 1
  std::vector<double> lin;
  for (int j = 0; j < 6; ++j) lin.push_back(1e-10 * std::pow(0.5, j));
  const Diagnostics dl = convergence_diagnostics(fake_trace(lin));
  CHECK(dl.p_steps == 4);
  CHECK(dl.p_hat == doctest::Approx(1.0).epsilon(0.05));
  CHECK_FALSE(dl.quadratic);

  // delta_j = 10^{-2^j}
  std::vector<double> quad;
  for (int j = 0; j < 6; ++j) quad.push_back(std::pow(10.0, -std::pow(2.0, j)));
  const Diagnostics dq = convergence_diagnostics(fake_trace(quad));
  CHECK(dq.p_hat == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(dq.quadratic);
  CHECK(dq.zeta_start == 0);
  CHECK_FALSE(dq.zeta_chain);  // 0.4 > 0.4^2

  CHECK_THROWS_AS(convergence_diagnostics(fake_trace({0.1, 0.01})), Error);
}

TEST_CASE("zeta chain and contraction predicates") {
  IterationTrace t = fake_trace({1e-2, 1e-4, 1e-8, 1e-16});
  const double z[] = {0.3, 0.08, 0.006, 3e-5};
  for (int j = 0; j < 4; ++j) t.rows[j].zeta_j = z[j];
  Diagnostics d = convergence_diagnostics(t);
  CHECK(d.zeta_chain);
  CHECK(d.contraction);
  t.rows[2].delta[0] = 1e-3;
  d = convergence_diagnostics(t);
  CHECK_FALSE(d.contraction);
}
