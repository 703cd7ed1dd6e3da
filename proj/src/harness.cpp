#include "crvb/harness.hpp"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <random>
#include <sstream>

#include <Eigen/Core>

#include "crvb/io.hpp"

namespace crvb {

Generator generator_from_string(const std::string& s) {
  if (s == "exp-polynomial") return Generator::ExpPolynomial;
  if (s == "nilpotent") return Generator::Nilpotent;
  if (s == "custom-file") return Generator::CustomFile;
  throw Error(ErrorKind::InvalidArgument, "unknown generator '" + s + "'");
}

std::string to_string(Generator g) {
  switch (g) {
    case Generator::ExpPolynomial: return "exp-polynomial";
    case Generator::Nilpotent: return "nilpotent";
    case Generator::CustomFile: return "custom-file";
  }
  return "exp-polynomial";
}

void ProblemSpec::validate() const {
  require(n >= 3, "n must be at least 3");
  require(rank >= 1, "rank must be at least 1");
  require(rho0 > 0.0, "rho0 must be positive");
  require(resolution >= 3 && resolution % 2 == 1, "resolution must be odd and >= 3");
  require(amplitude >= 0.0, "amplitude must be non-negative");
  require(degree >= 1, "degree must be at least 1");
  if (generator == Generator::Nilpotent) require(rank >= 2, "nilpotent generator needs rank >= 2");
  if (generator == Generator::CustomFile) require(!custom_file.empty(), "custom_file missing");
}

nlohmann::json ProblemSpec::to_json() const {
  return {{"n", n},
          {"rank", rank},
          {"rho0", rho0},
          {"resolution", resolution},
          {"amplitude", amplitude},
          {"seed", seed},
          {"generator", to_string(generator)},
          {"degree", degree},
          {"custom_file", custom_file}};
}

namespace {

template <class T>
void take(const nlohmann::json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::InvalidArgument, std::string("config field '") + key + "': " + e.what());
  }
}

void check_keys(const nlohmann::json& j, std::initializer_list<const char*> keys,
                const std::string& where) {
  if (!j.is_object()) throw Error(ErrorKind::InvalidArgument, where + " must be an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (const char* k : keys) known = known || it.key() == k;
    if (!known) throw Error(ErrorKind::InvalidArgument, "unknown key '" + it.key() + "' in " + where);
  }
}

}  // namespace

ProblemSpec ProblemSpec::from_json(const nlohmann::json& j, const ProblemSpec& base) {
  check_keys(j, {"n", "rank", "rho0", "resolution", "amplitude", "seed", "generator", "degree",
                 "custom_file"},
             "problem");
  ProblemSpec s = base;
  take(j, "n", s.n);
  take(j, "rank", s.rank);
  take(j, "rho0", s.rho0);
  take(j, "resolution", s.resolution);
  take(j, "amplitude", s.amplitude);
  take(j, "seed", s.seed);
  std::string g = to_string(s.generator);
  take(j, "generator", g);
  s.generator = generator_from_string(g);
  take(j, "degree", s.degree);
  take(j, "custom_file", s.custom_file);
  return s;
}

namespace {

MatrixPolynomial nilpotent_part(int m, int rank, int degree, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const Eigen::MatrixXcd e12 = elementary(rank, 1, 2);
  MatrixPolynomial p(m, rank);
  double total = 0.0;
  for (int d = 1; d <= degree; ++d)
    for (const auto& e : exponents_of(m, d, false)) {
      bool antiholomorphic = e[2 * m] == 0;
      for (int a = 0; a < m; ++a) antiholomorphic = antiholomorphic && e[a] == 0;
      if (!antiholomorphic) continue;
      const Complex c(u(rng), u(rng));
      total += std::abs(c);
      p.add_term(e, c * e12);
    }
  if (total > 0.0) p *= Complex(1.0 / total);
  return p;
}

}  // namespace

Problem manufacture_problem(const ProblemSpec& spec) {
  spec.validate();
  const int m = spec.n - 1;
  auto chart = std::make_shared<const GridChart>(build_grid(spec.n, spec.rho0, spec.resolution));
  std::mt19937_64 rng(spec.seed);
  const double bound = 1.0 - 2.0 * spec.amplitude;
  Problem out;
  double last = 0.0;
  for (int attempt = 1; attempt <= 5; ++attempt) {
    MatrixPolynomial p;
    switch (spec.generator) {
      case Generator::ExpPolynomial:
        p = random_polynomial(m, spec.rank, 1, spec.degree, rng, 1.0);
        break;
      case Generator::Nilpotent:
        p = nilpotent_part(m, spec.rank, spec.degree, rng);
        break;
      case Generator::CustomFile:
        p = polynomial_from_json(read_json(spec.custom_file));
        require(p.m() == m && p.rank() == spec.rank, "custom polynomial has the wrong shape");
        break;
    }
    MatrixPolynomial a = MatrixPolynomial::identity(m, spec.rank) + Complex(spec.amplitude) * p;
    a.prune();
    MatrixField field = MatrixField::sample(chart, a);
    last = min_singular_value(field);
    if (last >= bound - 1e-12 || spec.generator == Generator::CustomFile) {
      if (last < bound - 1e-12) break;
      out.a_poly = a;
      out.a_true = field;
      out.attempts = attempt;
      out.min_singular = last;
      auto exact = std::make_shared<const ExactForm>(ExactForm::pure_gauge(a));
      out.omega0 = sample_exact(chart, exact);
      return out;
    }
  }
  std::ostringstream os;
  os << "A_true min singular value " << last << " below 1 - 2 amplitude = " << bound;
  throw Error(ErrorKind::InvalidArgument, os.str());
}

std::string OutputPaths::path(const std::string& file) const {
  return (std::filesystem::path(dir) / file).string();
}

void RunConfig::validate() const {
  problem.validate();
  require(engine.jmax >= 1, "jmax must be at least 1");
  require(engine.k >= 0, "k must be non-negative");
  require(engine.alpha > 0.0 && engine.alpha <= 1.0, "alpha must lie in (0, 1]");
  require(engine.normalization_order >= 0, "normalization order must be non-negative");
  require(engine.kappa > 0.0 && engine.kappa <= 1.0, "kappa must lie in (0, 1]");
  require(engine.max_restarts >= 0, "max_restarts must be non-negative");
  require(engine.solver.max_iterations >= 1, "solver max_iterations must be positive");
  require(engine.solver.ansatz_degree >= 0, "ansatz_degree must be non-negative");
}

nlohmann::json RunConfig::to_json() const {
  const auto& e = engine;
  return {{"problem", problem.to_json()},
          {"engine",
           {{"k", e.k},
            {"alpha", e.alpha},
            {"normalization", to_string(e.normalization)},
            {"normalization_order", e.normalization_order},
            {"kappa", e.kappa},
            {"jmax", e.jmax},
            {"tol", e.tol},
            {"tol_relative", e.tol_relative},
            {"max_restarts", e.max_restarts},
            {"c_tilde", e.c_tilde},
            {"smallness", e.smallness},
            {"holder_pairs", e.holder_pairs},
            {"seed", e.seed}}},
          {"solver",
           {{"lambda", e.solver.lambda},
            {"residual_tol", e.solver.residual_tol},
            {"max_iterations", e.solver.max_iterations},
            {"backend", to_string(e.solver.backend)},
            {"ansatz_degree", e.solver.ansatz_degree},
            {"rank_tol", e.solver.rank_tol}}},
          {"output",
           {{"dir", output.dir},
            {"omega", output.omega},
            {"gauge", output.gauge},
            {"trace", output.trace},
            {"summary", output.summary}}}};
}

RunConfig RunConfig::from_json(const nlohmann::json& j, const RunConfig& base) {
  check_keys(j, {"problem", "engine", "solver", "output"}, "config");
  RunConfig c = base;
  if (j.contains("problem")) c.problem = ProblemSpec::from_json(j.at("problem"), base.problem);
  if (j.contains("engine")) {
    const auto& e = j.at("engine");
    check_keys(e, {"k", "alpha", "normalization", "normalization_order", "kappa", "jmax", "tol",
                   "tol_relative", "max_restarts", "c_tilde", "smallness", "holder_pairs", "seed"},
               "engine");
    take(e, "k", c.engine.k);
    take(e, "alpha", c.engine.alpha);
    std::string mode = to_string(c.engine.normalization);
    take(e, "normalization", mode);
    c.engine.normalization = normalization_mode_from_string(mode);
    take(e, "normalization_order", c.engine.normalization_order);
    take(e, "kappa", c.engine.kappa);
    take(e, "jmax", c.engine.jmax);
    take(e, "tol", c.engine.tol);
    take(e, "tol_relative", c.engine.tol_relative);
    take(e, "max_restarts", c.engine.max_restarts);
    take(e, "c_tilde", c.engine.c_tilde);
    take(e, "smallness", c.engine.smallness);
    take(e, "holder_pairs", c.engine.holder_pairs);
    take(e, "seed", c.engine.seed);
  }
  if (j.contains("solver")) {
    const auto& s = j.at("solver");
    check_keys(s, {"lambda", "residual_tol", "max_iterations", "backend", "ansatz_degree", "rank_tol"},
               "solver");
    take(s, "lambda", c.engine.solver.lambda);
    take(s, "residual_tol", c.engine.solver.residual_tol);
    take(s, "max_iterations", c.engine.solver.max_iterations);
    std::string b = to_string(c.engine.solver.backend);
    take(s, "backend", b);
    c.engine.solver.backend = solver_backend_from_string(b);
    take(s, "ansatz_degree", c.engine.solver.ansatz_degree);
    take(s, "rank_tol", c.engine.solver.rank_tol);
  }
  if (j.contains("output")) {
    const auto& o = j.at("output");
    check_keys(o, {"dir", "omega", "gauge", "trace", "summary"}, "output");
    take(o, "dir", c.output.dir);
    take(o, "omega", c.output.omega);
    take(o, "gauge", c.output.gauge);
    take(o, "trace", c.output.trace);
    take(o, "summary", c.output.summary);
  }
  c.validate();
  return c;
}

RunConfig load_run_config(const std::string& path) {
  RunConfig c = RunConfig::from_json(read_json(path));
  apply_environment(c);
  return c;
}

void apply_environment(RunConfig& cfg) {
  if (const char* s = std::getenv("CRVB_SEED"); s && *s) {
    try {
      cfg.problem.seed = std::stoull(s);
    } catch (const std::exception&) {
      throw Error(ErrorKind::InvalidArgument, std::string("CRVB_SEED is not an integer: ") + s);
    }
  }
  if (const char* t = std::getenv("CRVB_THREADS"); t && *t) {
    const int threads = std::atoi(t);
    require(threads >= 1, std::string("CRVB_THREADS must be a positive integer: ") + t);
    Eigen::setNbThreads(threads);
  }
}

nlohmann::json run_summary(const RunConfig& cfg, const RunResult& r, double seconds) {
  int steps = 0;
  for (const auto& row : r.trace.rows) steps += row.applied ? 1 : 0;
  nlohmann::json j = {{"converged", r.converged},
                      {"steps", steps},
                      {"restarts", r.restarts},
                      {"kappa", r.kappa},
                      {"normalization_order", r.normalization_order},
                      {"tol", r.tol},
                      {"omega0_norm", r.omega0_norm},
                      {"final_residual", r.final_residual},
                      {"relative_residual",
                       r.omega0_norm > 0.0 ? r.final_residual / r.omega0_norm : 0.0},
                      {"invertibility_margin", r.invertibility_margin},
                      {"min_singular", r.min_singular},
                      {"notes", r.notes},
                      {"seconds", seconds},
                      {"config", cfg.to_json()}};
  if (r.trace.rows.size() >= 3) {
    const Diagnostics d = convergence_diagnostics(r.trace);
    j["diagnostics"] = {{"p_hat", d.p_hat},
                        {"p_steps", d.p_steps},
                        {"quadratic", d.quadratic},
                        {"zeta_start", d.zeta_start},
                        {"zeta_chain", d.zeta_chain},
                        {"contraction", d.contraction},
                        {"j1", d.j1},
                        {"holder_constant", d.holder_constant},
                        {"holder_ratio_max", d.holder_ratio_max},
                        {"holder_bounded", d.holder_bounded}};
  }
  return j;
}

std::string plot_csv(const IterationTrace& trace) {
  std::ostringstream os;
  os.precision(17);
  os << "j";
  for (int s = 0; s <= trace.k; ++s) os << ",log10_delta" << s;
  os << ",zeta_j,eta_hat";
  if (trace.k >= 1) os << ",eta_ratio";
  os << "\n";
  for (const auto& r : trace.rows) {
    os << r.j;
    for (double d : r.delta) os << "," << (d > 0.0 ? std::log10(d) : -INFINITY);
    os << "," << r.zeta_j << "," << r.eta_hat;
    if (trace.k >= 1) {
      // (||B||_k / ||omega||_k) / (||B||_0 / ||omega||_0)
      const double dk = r.delta[static_cast<std::size_t>(trace.k)];
      os << "," << (dk > 0.0 && r.eta_hat > 0.0 ? r.norm_b / dk / r.eta_hat : 0.0);
    }
    os << "\n";
  }
  return os.str();
}

IterationTrace parse_trace_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::Format, "empty trace");
  std::vector<std::string> cols;
  {
    std::istringstream h(line);
    std::string c;
    while (std::getline(h, c, ',')) cols.push_back(c);
  }
  IterationTrace t;
  t.k = -1;
  for (const auto& c : cols)
    if (c.rfind("delta", 0) == 0) ++t.k;
  if (t.k < 0 || cols.size() != static_cast<std::size_t>(t.k + 10))
    throw Error(ErrorKind::Format, "unexpected trace header: " + line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> v;
    std::istringstream row(line);
    std::string c;
    try {
      while (std::getline(row, c, ',')) v.push_back(std::stod(c));
    } catch (const std::exception&) {
      throw Error(ErrorKind::Format, "bad trace row: " + line);
    }
    if (v.size() != cols.size()) throw Error(ErrorKind::Format, "bad trace row: " + line);
    TraceRow r;
    std::size_t i = 0;
    r.j = static_cast<int>(v[i++]);
    r.rho = v[i++];
    r.sigma = v[i++];
    for (int s = 0; s <= t.k; ++s) r.delta.push_back(v[i++]);
    r.eta_hat = v[i++];
    r.alpha_j = v[i++];
    r.zeta_j = v[i++];
    r.norm_b = v[i++];
    r.norm_b_holder = v[i++];
    r.residual = v[i++];
    t.rows.push_back(r);
  }
  if (!t.rows.empty()) t.rows.back().applied = false;
  return t;
}

}  // namespace crvb
