#pragma once

#include <cstdint>
#include <string>

#include "crvb/cr_calculus.hpp"
#include "crvb/error.hpp"

namespace crvb {

enum class SolverBackend { Ansatz, Direct, Iterative };

SolverBackend solver_backend_from_string(const std::string& s);
std::string to_string(SolverBackend b);

struct SolverConfig {
  /// Tikhonov weight; negative selects 1e-8 times the lattice cell volume.
  double lambda = -1.0;
  /// Relative normal-equation residual for the iterative backend.
  double residual_tol = 1e-8;
  int max_iterations = 4000;
  SolverBackend backend = SolverBackend::Ansatz;
  /// Total degree of the ansatz space (ansatz backend).
  int ansatz_degree = 2;
  /// Relative singular-value cutoff of the ansatz least-squares solve.
  double rank_tol = 1e-10;
};

struct SolverReport {
  double rho = 0.0;
  double sigma = 0.0;
  int k = 0;
  double eta_hat = 0.0;   // ||B||_{rho',k} / ||omega||_{rho,k}
  double residual = 0.0;  // max over target points of |L(B) + omega|
  int iters = 0;
  double lambda = 0.0;
  std::string note;

  static std::string csv_header() { return "rho,sigma,k,eta_hat,residual,iters"; }
  std::string csv_row() const;
};

struct SolveResult {
  MatrixField b;
  SolverReport report;
};

/// Thrown when the iterative backend stops before residual_tol; carries the
/// best iterate.
class SolverFailure : public Error {
 public:
  SolverFailure(const std::string& msg, SolveResult best)
      : Error(ErrorKind::SolverFailure, msg), best_(std::move(best)) {}
  const SolveResult& best() const { return best_; }

 private:
  SolveResult best_;
};

/// Least-squares right inverse of dbar on D_rho:
///
///   minimize sum_alpha |L_alpha(B) + omega_alpha|^2 + lambda |B|^2,
///
/// with L_alpha(B) = Xbar_alpha B, or, when a frame gauge G is given,
/// L_alpha(B) = Xbar_alpha(B G) - B Xbar_alpha G (all differences on the grid).
/// The G form is the linearization used by the iteration: with R = Xbar G + G w
/// and G' = (I + B) G, the new residual is (L(B) + R) + B R.
/// Equations sit at points of D_rho whose stencil lies in the lattice and where
/// omega is defined. The grid backends (direct, iterative) take the values of B
/// at those points and their stencil neighbors as unknowns, B being zero
/// elsewhere. The ansatz backend takes B G = C with C a matrix polynomial of
/// total degree <= ansatz_degree in the normalized lattice coordinates, solves
/// for the minimum-norm coefficients (QR, then a rank-revealing
/// solve of the triangular factor), and returns B = C G^{-1} on every lattice
/// point where G is defined. The report is measured on D_{rho(1-sigma)}.
SolveResult solve_P(const ConnectionForm& omega, double rho, double sigma, const SolverConfig& cfg,
                    const TangentialFrame& frame, const MatrixField* gauge = nullptr);

/// T*_{rho^{-1}} o P_(1) o T*_rho on the Heisenberg group: pull omega on D_rho
/// back to the unit ball, solve there, push the result forward by index copy.
SolveResult solve_P_scaled(const ConnectionForm& omega, double rho, double sigma,
                           const SolverConfig& cfg, const TangentialFrame& frame,
                           const MatrixField* gauge = nullptr);

/// Residual field L(B) + omega (the quantity the solve minimizes).
ConnectionForm solver_residual(const ConnectionForm& omega, const MatrixField& b,
                               const TangentialFrame& frame, const MatrixField* gauge = nullptr);

struct ProbeStats {
  double max = 0.0;
  double mean = 0.0;
  std::vector<double> samples;
};

/// Max/mean of ||solve_P(w)||_{rho(1-sigma),k} / ||w||_{rho,k} over seeded
/// random polynomial forms w of degree <= 2.
ProbeStats operator_norm_probe(const SolverConfig& cfg, const ChartPtr& chart, double rho,
                               double sigma, int k, int trials, std::uint64_t seed, int rank = 2);

}  // namespace crvb
