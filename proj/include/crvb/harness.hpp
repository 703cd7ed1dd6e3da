#pragma once

#include <cstdint>
#include <string>

#include <json.hpp>

#include "crvb/kam_engine.hpp"

namespace crvb {

enum class Generator { ExpPolynomial, Nilpotent, CustomFile };

Generator generator_from_string(const std::string& s);
std::string to_string(Generator g);

struct ProblemSpec {
  int n = 3;
  int rank = 2;
  double rho0 = 1.0;
  int resolution = 9;
  double amplitude = 1e-2;
  std::uint64_t seed = 1;
  Generator generator = Generator::ExpPolynomial;
  int degree = 2;           // total degree of A_true - I
  std::string custom_file;  // polynomial JSON for A_true - I (custom-file)

  void validate() const;
  nlohmann::json to_json() const;
  static ProblemSpec from_json(const nlohmann::json& j, const ProblemSpec& base);
};

struct Problem {
  ConnectionForm omega0;   // grid values plus exact representation
  MatrixField a_true;      // polynomial backend
  MatrixPolynomial a_poly;
  int attempts = 1;
  double min_singular = 1.0;  // of A_true over D_rho0
};

/// A_true = I + amplitude * P with P a seeded random polynomial of degree
/// 1..degree normalized to coefficient-norm sum 1 (so |P| <= 1 on D_1), and
/// omega0 = -A_true^{-1} dbar A_true in closed form. Regenerates (next draw of
/// the same stream) while min singular value < 1 - 2 amplitude, at most 5 times.
Problem manufacture_problem(const ProblemSpec& spec);

struct OutputPaths {
  std::string dir = "out";
  std::string omega = "omega.crvb";
  std::string gauge = "G.crvb";
  std::string trace = "trace.csv";
  std::string summary = "summary.json";

  std::string path(const std::string& file) const;
};

struct RunConfig {
  ProblemSpec problem;
  EngineConfig engine;
  OutputPaths output;

  void validate() const;
  nlohmann::json to_json() const;
  /// Fields absent from `j` keep the values of `base`.
  static RunConfig from_json(const nlohmann::json& j, const RunConfig& base);
  static RunConfig from_json(const nlohmann::json& j) { return from_json(j, RunConfig{}); }
};

/// Reads a JSON config over the built-in defaults and applies CRVB_SEED.
RunConfig load_run_config(const std::string& path);

/// CRVB_SEED overrides the problem seed; CRVB_THREADS sets the Eigen thread count.
void apply_environment(RunConfig& cfg);

nlohmann::json run_summary(const RunConfig& cfg, const RunResult& r, double seconds);

/// Plot-ready columns: j, log10 delta_j^(s), zeta_j, eta_hat_j and, for k >= 1,
/// eta_ratio = eta_hat_j^(k) / eta_hat_j^(0).
std::string plot_csv(const IterationTrace& trace);

/// Parses a trace CSV written by IterationTrace::csv.
IterationTrace parse_trace_csv(const std::string& text);

}  // namespace crvb
