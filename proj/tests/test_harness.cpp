#include <doctest.h>

#include <cstdlib>

#include "crvb/error.hpp"
#include "crvb/harness.hpp"

using namespace crvb;

namespace {

ProblemSpec small_spec() {
  ProblemSpec s;
  s.resolution = 5;
  return s;
}

}  // namespace

TEST_CASE("config JSON round trip") {
  RunConfig a;
  a.problem.n = 4;
  a.problem.amplitude = 0.03;
  a.engine.k = 0;
  a.engine.normalization = NormalizationMode::FS;
  a.engine.solver.backend = SolverBackend::Iterative;
  a.output.dir = "elsewhere";
  const nlohmann::json j = a.to_json();
  const RunConfig b = RunConfig::from_json(j);
  CHECK(b.to_json() == j);
  CHECK(b.problem.n == 4);
  CHECK(b.engine.normalization == NormalizationMode::FS);
  CHECK(b.output.dir == "elsewhere");
}

TEST_CASE("partial configs keep the base values") {
  const RunConfig d;
  const RunConfig r = RunConfig::from_json(nlohmann::json::parse(R"({"problem": {"seed": 9}})"));
  CHECK(r.problem.seed == 9u);
  CHECK(r.problem.resolution == d.problem.resolution);
  CHECK(r.engine.jmax == d.engine.jmax);
}

TEST_CASE("config errors") {
  CHECK_THROWS_AS(RunConfig::from_json(nlohmann::json::parse(R"({"problme": {}})")), Error);
  CHECK_THROWS_AS(RunConfig::from_json(nlohmann::json::parse(R"({"problem": {"n": "three"}})")), Error);
  CHECK_THROWS_AS(RunConfig::from_json(nlohmann::json::parse(R"({"problem": {"resolution": 8}})")), Error);
  CHECK_THROWS_AS(generator_from_string("gaussian"), Error);
  for (Generator g : {Generator::ExpPolynomial, Generator::Nilpotent, Generator::CustomFile})
    CHECK(generator_from_string(to_string(g)) == g);
}

TEST_CASE("CRVB_SEED overrides the problem seed") {
  RunConfig c;
  setenv("CRVB_SEED", "42", 1);
  apply_environment(c);
  CHECK(c.problem.seed == 42u);
  setenv("CRVB_SEED", "x1", 1);
  CHECK_THROWS_AS(apply_environment(c), Error);
  unsetenv("CRVB_SEED");
  RunConfig d;
  apply_environment(d);
  CHECK(d.problem.seed == RunConfig{}.problem.seed);
}

TEST_CASE("manufactured problems are deterministic and integrable") {
  const ProblemSpec s = small_spec();
  const Problem a = manufacture_problem(s), b = manufacture_problem(s);
  CHECK((a.a_poly - b.a_poly).max_coefficient() == 0.0);
  CHECK(a.omega0[1].values() == b.omega0[1].values());
  CHECK(a.min_singular >= 1.0 - 2.0 * s.amplitude);
  const TangentialFrame frame(DefiningSurface::heisenberg(s.n));
  CHECK(max_norm(integrability_residual(a.omega0, frame)) <= 1e-12);
  // the true gauge flattens it
  const ConnectionForm flat = gauge_transform(a.omega0, a.a_true, frame);
  double v = 0.0;
  for (const auto& comp : flat.components)
    for (std::size_t i = 0; i < comp.size(); ++i)
      if (comp.active(i)) v = std::max(v, comp.at(i).norm());
  CHECK(v <= 1e-13);

  ProblemSpec other = s;
  other.seed = 2;
  CHECK((manufacture_problem(other).a_poly - a.a_poly).max_coefficient() > 0.0);
}

TEST_CASE("nilpotent generator") {
  ProblemSpec s = small_spec();
  s.generator = Generator::Nilpotent;
  const Problem p = manufacture_problem(s);
  const TangentialFrame frame(DefiningSurface::heisenberg(s.n));
  CHECK(max_norm(integrability_residual(p.omega0, frame)) <= 1e-12);
}

TEST_CASE("trace CSV and plot columns") {
  IterationTrace t;
  t.k = 1;
  for (int j = 0; j < 3; ++j) {
    TraceRow r;
    r.j = j;
    r.rho = 1.0 / (j + 1);
    r.delta = {std::pow(10.0, -j - 1), std::pow(10.0, -j)};
    r.eta_hat = 0.5;
    r.zeta_j = 0.1;
    r.norm_b = 1e-3;
    r.applied = j < 2;
    t.rows.push_back(r);
  }
  const IterationTrace back = parse_trace_csv(t.csv());
  CHECK(back.k == 1);
  REQUIRE(back.rows.size() == 3u);
  CHECK(back.rows[1].delta[0] == doctest::Approx(1e-2));
  CHECK(back.rows[2].delta[1] == doctest::Approx(1e-2));
  CHECK_FALSE(back.rows[2].applied);
  const std::string plot = plot_csv(t);
  CHECK(plot.find("-3") != std::string::npos);
  CHECK_THROWS_AS(parse_trace_csv(""), Error);
  CHECK_THROWS_AS(parse_trace_csv("a,b\n1,2\n"), Error);
}

TEST_CASE("output paths") {
  OutputPaths p;
  p.dir = "runs/a";
  CHECK(p.path(p.trace) == "runs/a/trace.csv");
}
