#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include <CLI11.hpp>

#include "crvb/harness.hpp"
#include "crvb/io.hpp"

using namespace crvb;

namespace {

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Diverged:
    case ErrorKind::SmallnessViolation:
    case ErrorKind::FrameDegenerate:
    case ErrorKind::SolverFailure:
      return 2;
    case ErrorKind::Format:
    case ErrorKind::Io:
      return 3;
    default:
      return 1;
  }
}

RunConfig config_or_defaults(const std::string& path) {
  if (!path.empty()) return load_run_config(path);
  RunConfig c;
  apply_environment(c);
  return c;
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::Io, "cannot create " + dir + ": " + ec.message());
}

int cmd_manufacture(const std::string& config, const std::string& out_dir) {
  RunConfig cfg = config_or_defaults(config);
  if (!out_dir.empty()) cfg.output.dir = out_dir;
  ensure_dir(cfg.output.dir);
  Problem p = manufacture_problem(cfg.problem);
  save_field(cfg.output.path(cfg.output.omega), FieldFile::from(p.omega0));
  save_field(cfg.output.path("A_true.crvb"), FieldFile::from(p.a_true));
  nlohmann::json j = {{"problem", cfg.problem.to_json()},
                      {"attempts", p.attempts},
                      {"min_singular", p.min_singular},
                      {"a_true", polynomial_to_json(p.a_poly)}};
  write_text(cfg.output.path("problem.json"), j.dump(2) + "\n");
  std::cout << "manufactured " << cfg.output.path(cfg.output.omega) << " (attempts "
            << p.attempts << ", min singular value " << p.min_singular << ")\n";
  return 0;
}

int cmd_flatten(const std::string& config, const std::string& out_dir) {
  RunConfig cfg = config_or_defaults(config);
  if (!out_dir.empty()) cfg.output.dir = out_dir;
  ensure_dir(cfg.output.dir);
  const auto t0 = std::chrono::steady_clock::now();
  Problem p = manufacture_problem(cfg.problem);
  const TangentialFrame frame(DefiningSurface::heisenberg(cfg.problem.n));
  RunResult r = run(p.omega0, cfg.engine, frame);
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  save_field(cfg.output.path(cfg.output.omega), FieldFile::from(r.omega0));
  save_field(cfg.output.path(cfg.output.gauge), FieldFile::from(r.g));
  write_text(cfg.output.path(cfg.output.trace), r.trace.csv());
  write_text(cfg.output.path(cfg.output.summary), run_summary(cfg, r, secs).dump(2) + "\n");
  for (const auto& n : r.notes) std::cerr << "note: " << n << "\n";
  std::cout << (r.converged ? "converged" : "not converged") << " after "
            << (r.trace.rows.empty() ? 0 : r.trace.rows.back().j) << " steps, residual "
            << r.final_residual << " (tol " << r.tol << "), " << secs << " s\n";
  return r.converged ? 0 : 2;
}

int cmd_verify(const std::string& omega_path, const std::string& gauge_path, double rho,
               double tol) {
  ConnectionForm omega = load_field(omega_path).form();
  MatrixField g = load_field(gauge_path).matrix();
  require(omega.chart().same_lattice(g.chart()), "omega and gauge live on different lattices");
  if (rho <= 0.0) rho = radius_schedule(omega.chart().rho(), 1).rho_infinity;
  const TangentialFrame frame(DefiningSurface::heisenberg(omega.chart().n()));
  const VerifyReport v = verify_solution(omega, g, frame, rho);
  const double scale = 1.0 + ck_norm(omega, omega.chart().rho(), 0).value;
  const bool ok = v.raw <= tol * scale;
  nlohmann::json j = {{"rho", v.rho},
                      {"raw", v.raw},
                      {"normalized", v.normalized},
                      {"tol", tol * scale},
                      {"ok", ok}};
  std::cout << j.dump(2) << "\n";
  return ok ? 0 : 1;
}

int cmd_norms(const std::string& field, double rho, int k, double alpha, std::int64_t budget,
              std::uint64_t seed) {
  FieldFile f = load_field(field);
  if (rho <= 0.0) rho = f.chart->rho();
  const TangentialFrame frame(DefiningSurface::heisenberg(f.chart->n()));
  std::vector<NormReport> reports;
  if (f.kind == "form") {
    ConnectionForm w = f.form();
    reports.push_back(ck_norm(w, rho, k));
    reports.push_back(holder_seminorm(w, rho, k, alpha, budget, seed));
    reports.push_back(fs_norm(w, rho, k, alpha, frame, budget, seed));
  } else {
    MatrixField a = f.matrix();
    reports.push_back(ck_norm(a, rho, k));
    reports.push_back(holder_seminorm(a, rho, k, alpha, budget, seed));
    reports.push_back(fs_norm(a, rho, k, alpha, frame, budget, seed));
  }
  std::cout << NormReport::csv_header() << "\n";
  for (const auto& r : reports) std::cout << r.csv_row() << "\n";
  return 0;
}

int cmd_trace(const std::string& input, const std::string& output) {
  std::ifstream in(input, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot read " + input);
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string csv = plot_csv(parse_trace_csv(ss.str()));
  if (output.empty())
    std::cout << csv;
  else
    write_text(output, csv);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Flatten CR vector-bundle connections by rapid iteration"};
  app.require_subcommand(1);

  std::string config, out_dir;
  auto* manufacture = app.add_subcommand("manufacture", "write a manufactured problem");
  manufacture->add_option("--config", config, "run configuration (JSON)");
  manufacture->add_option("--out", out_dir, "output directory");

  auto* flatten = app.add_subcommand("flatten", "run the iteration on a manufactured problem");
  flatten->add_option("--config", config, "run configuration (JSON)");
  flatten->add_option("--out", out_dir, "output directory");

  std::string omega_path, gauge_path;
  double rho = -1.0, tol = 1e-8;
  auto* verify = app.add_subcommand("verify", "recompute the gauge residual from files");
  verify->add_option("--omega", omega_path, "connection form file")->required();
  verify->add_option("--gauge", gauge_path, "gauge file")->required();
  verify->add_option("--rho", rho, "radius (default: limiting radius of the schedule)");
  verify->add_option("--tol", tol, "pass threshold, relative to 1 + ||omega||");

  std::string field;
  int k = 0;
  double alpha = 0.5;
  std::int64_t budget = 200000;
  std::uint64_t seed = 1;
  auto* norms = app.add_subcommand("norms", "norm reports for a field file");
  norms->add_option("--field", field, "field file")->required();
  norms->add_option("--rho", rho, "radius (default: chart radius)");
  norms->add_option("--k", k, "derivative order");
  norms->add_option("--alpha", alpha, "Hölder exponent");
  norms->add_option("--pairs", budget, "Hölder pair budget");
  norms->add_option("--seed", seed, "Hölder sampling seed");

  std::string input, output;
  auto* trace = app.add_subcommand("trace", "plot-ready CSV from a trace file");
  trace->add_option("--input", input, "trace CSV")->required();
  trace->add_option("--output", output, "output CSV (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << app.help();
    return 1;
  }

  try {
    if (*manufacture) return cmd_manufacture(config, out_dir);
    if (*flatten) return cmd_flatten(config, out_dir);
    if (*verify) return cmd_verify(omega_path, gauge_path, rho, tol);
    if (*norms) return cmd_norms(field, rho, k, alpha, budget, seed);
    if (*trace) return cmd_trace(input, output);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
