#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "crvb/cr_calculus.hpp"
#include "crvb/fields.hpp"

namespace crvb {

struct NormReport {
  std::string kind;  // ck | holder | fs | fs_scaled
  int k = 0;
  double alpha = 0.0;
  double rho = 0.0;
  double value = 0.0;
  std::vector<std::pair<std::string, double>> breakdown;

  static std::string csv_header() { return "kind,k,alpha,rho,value"; }
  std::string csv_row() const;
};

struct NormConstants {
  int k = 0;
  double c_tilde = 1.0;   // max(1, measured)
  double measured = 0.0;  // largest observed ||AB|| / (||A|| ||B||)
  int trials = 0;
};

/// Max over lattice points of D_rho of the operator 2-norm of every coordinate
/// derivative of order <= k. Each derivative is taken over the points whose
/// central stencil stays inside D_rho and the defined set. Polynomial-backed
/// fields are differentiated exactly.
NormReport ck_norm(const MatrixField& f, double rho, int k);
NormReport ck_norm(const ConnectionForm& w, double rho, int k);

/// Lower bound for the Hölder seminorm of the order-k derivatives with respect
/// to Euclidean distance in graph coordinates. Uses all pairs when their
/// number is within `pair_budget`, otherwise `pair_budget` seeded pairs.
NormReport holder_seminorm(const MatrixField& f, double rho, int k, double alpha,
                           std::int64_t pair_budget = 200000, std::uint64_t seed = 1);
NormReport holder_seminorm(const ConnectionForm& w, double rho, int k, double alpha,
                           std::int64_t pair_budget = 200000, std::uint64_t seed = 1);

/// Folland-Stein norm: sup of T^m X^S Xbar^R F over 2m + |S| + |R| <= k, and for
/// alpha > 0 also Hölder ratios of the top-weight derivatives in the Korányi
/// distance. Heisenberg frame only.
NormReport fs_norm(const MatrixField& f, double rho, int k, double alpha,
                   const TangentialFrame& frame, std::int64_t pair_budget = 200000,
                   std::uint64_t seed = 1);
NormReport fs_norm(const ConnectionForm& w, double rho, int k, double alpha,
                   const TangentialFrame& frame, std::int64_t pair_budget = 200000,
                   std::uint64_t seed = 1);

/// fs_norm of the pullback T_rho^* phi over the unit ball.
NormReport scaled_fs_norm(const ConnectionForm& phi, double rho, int k, double alpha,
                          const TangentialFrame& frame, std::int64_t pair_budget = 200000,
                          std::uint64_t seed = 1);

/// Folland-Stein multi-index T^t X^S Xbar^R (S, R are counts per alpha).
struct FsIndex {
  int t = 0;
  std::vector<int> s, r;
  int weight() const;
};
/// All indices with 2t + |S| + |R| <= k.
std::vector<FsIndex> fs_indices(int m, int k);

/// Korányi distance |(w,s)^{-1} (z,t)| between two graph-coordinate points.
double koranyi_distance(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

/// Measured constant with ||AB||_k <= c ||A||_k ||B||_k over seeded random
/// polynomial pairs on the unit chart.
NormConstants submultiplicativity_constant(int k, int trials, std::uint64_t seed,
                                           int n = 3, int rank = 2, int resolution = 9);

struct NeumannCheck {
  double norm_b = 0.0;
  double norm_inverse = 0.0;
  double bound = 0.0;
  bool holds = false;
};
/// ||(I+B)^{-1}||_{rho,0} against 1/(1 - c ||B||_{rho,0}).
NeumannCheck neumann_check(const MatrixField& b, double rho, double c_tilde = 1.0);

/// c sigma^{-2n-2k+1} rho^{-2k}.
double eta_bound(int n, int k, double rho, double sigma, double c = 1.0);
/// 2^{2n+2k-1} (1 - sigma_j)^{-2k}.
double alpha_j(int n, int k, int j);

}  // namespace crvb
