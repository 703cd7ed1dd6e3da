#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "crvb/dbar_solver.hpp"
#include "crvb/normalization.hpp"
#include "crvb/norms.hpp"

namespace crvb {

enum class NormalizationMode { Taylor, FS, Dilation, None };

NormalizationMode normalization_mode_from_string(const std::string& s);
std::string to_string(NormalizationMode m);

struct EngineConfig {
  int k = 1;                 // highest tracked derivative order
  double alpha = 0.5;        // Hölder exponent for the B trace
  NormalizationMode normalization = NormalizationMode::Taylor;
  int normalization_order = 1;
  double kappa = 1.0;        // initial dilation (dilation mode)
  int jmax = 8;
  /// Stop when delta_j^(0) <= tol; negative selects tol_relative * ||omega0||_{rho0,0}.
  double tol = -1.0;
  double tol_relative = 1e-8;
  int max_restarts = 3;
  double c_tilde = 1.0;      // submultiplicativity constant used in the predicates
  double smallness = 0.5;    // c_tilde ||B||_{rho_{j+1},k} must stay below this
  std::int64_t holder_pairs = 20000;
  std::uint64_t seed = 1;
  SolverConfig solver;
};

struct TraceRow {
  int j = 0;
  double rho = 0.0;
  double sigma = 0.0;
  std::vector<double> delta;  // ||omega_j||_{rho_j,s}, s = 0..k
  double eta_hat = 0.0;       // ||B_{j+1}||_{rho_{j+1},0} / ||omega_j||_{rho_j,0}
  double alpha_j = 0.0;
  double zeta_j = 0.0;
  double norm_b = 0.0;        // ||B_{j+1}||_{rho_{j+1},k}
  double norm_b_holder = 0.0; // Hölder seminorm of order k, exponent alpha
  double norm_b_holder0 = 0.0; // same at order 0 (not written to the CSV)
  double residual = 0.0;      // solver residual on D_{rho_{j+1}}
  bool applied = true;        // false for the closing probe row
};

struct IterationTrace {
  int k = 0;
  std::vector<TraceRow> rows;

  std::string csv_header() const;
  std::string csv() const;
};

struct IterationState {
  int j = 0;
  ChartPtr chart;
  ConnectionForm omega0;  // target, grid values
  MatrixField g;          // G_j
  ConnectionForm r;       // Xbar G_j + G_j omega0
  ConnectionForm omega;   // omega_j = r G_j^{-1}
  RadiusSchedule schedule;
};

/// Initial state with G_0 = g0 (identity when null).
IterationState initial_state(const ConnectionForm& omega0, const MatrixField* g0, int jmax,
                             const TangentialFrame& frame);

/// One step: B = least-squares solve of L_G(B) = -R_j on D_{rho_j}; G_{j+1} = (I+B) G_j;
/// R and omega recomputed from omega0. Throws smallness-violation when
/// c_tilde ||B||_{rho_{j+1},k} >= smallness.
TraceRow kam_step(IterationState& state, const EngineConfig& cfg, const TangentialFrame& frame);

struct RunResult {
  MatrixField g;
  IterationTrace trace;
  bool converged = false;
  int restarts = 0;
  double kappa = 1.0;
  int normalization_order = 0;
  double tol = 0.0;
  double invertibility_margin = 1.0;  // 1 - sum_l (2 c_tilde)^l ||B_l||
  double min_singular = 0.0;          // of G over D_{rho_infinity}
  double final_residual = 0.0;        // ||Xbar G + G omega0||_{rho_infinity,0}
  double omega0_norm = 0.0;           // ||omega0||_{rho0,0}
  ConnectionForm omega0;              // target actually flattened (after prescaling)
  std::vector<std::string> notes;
};

RunResult run(const ConnectionForm& omega0, const EngineConfig& cfg, const TangentialFrame& frame);

struct VerifyReport {
  double raw = 0.0;         // ||Xbar G + G omega0||_{rho,0}
  double normalized = 0.0;  // ||(Xbar G + G omega0) G^{-1}||_{rho,0}
  double rho = 0.0;
};

VerifyReport verify_solution(const ConnectionForm& omega0, const MatrixField& g,
                             const TangentialFrame& frame, double rho);

struct Diagnostics {
  double p_hat = 0.0;
  int p_steps = 0;
  bool quadratic = false;      // p_hat >= 1.5
  int zeta_start = -1;         // first j with zeta_j < 1/2
  bool zeta_chain = false;
  int j1 = -1;                 // start of the strictly decreasing delta^(1) tail
  double holder_ratio_max = 0.0;
  double holder_constant = 0.0;  // 10 max(1, max_j eta_hat_j)
  bool holder_bounded = false;
  bool contraction = false;    // delta_{j+1} <= 1.5 eta_j delta_j^2 on applied steps
};

/// Exponent fit over steps [first, last] (pairs j, j+1 with delta_j < 1).
Diagnostics convergence_diagnostics(const IterationTrace& trace, int first = 1, int last = 4);

}  // namespace crvb
