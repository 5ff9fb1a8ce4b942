#pragma once

#include <iosfwd>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "odr_dro/model.hpp"
#include "odr_dro/reformulations.hpp"

namespace odr {

struct AdmmConfig {
  double rho = 10.0;
  double tol_primal = 1e-6;
  double tol_dual = 1e-6;
  int max_iter = 500;
  double time_limit = std::numeric_limits<double>::infinity();  // seconds, checked between iterations
  std::optional<Matrix> init_b;  // PCA map [I; 0] when unset
  bool adaptive_rho = true;
  SolverTolerances solver;      // subproblem and certification solves
  std::ostream* trace = nullptr;  // CSV: iter,objective,primal,dual,rho

  // Throws InputError when a field is out of range.
  void check() const;
};

struct AdmmState {
  Matrix b;
  Matrix beta;          // K x m
  Matrix lambda_u1;     // lifted variant only, m1 x m1
  Matrix lambda_u2;     // lifted variant only, m x m1
  Matrix c_map;         // lifted variant only, m x m1
  Matrix split_lhs;     // K x m rows: u_tilde_k (upper forms) or omega_k (lower form)
  Matrix split_rhs;     // K x cols rows: u_k or p_k
  Matrix last_residual; // K x m, split_lhs - B split_rhs after the last B-step
  std::vector<double> rho_history;  // penalty used by each multiplier update
  std::vector<double> primal_history;
  std::vector<double> dual_history;
  int iteration = 0;
};

struct AdmmReport {
  double certified_bound = std::numeric_limits<double>::quiet_NaN();
  bool certified = false;
  Matrix certified_b;          // the map the reported bound was certified at
  double final_b_bound = std::numeric_limits<double>::quiet_NaN();
  bool final_b_certified = false;
  double raw_objective = std::numeric_limits<double>::quiet_NaN();
  int iterations = 0;
  double primal_residual = std::numeric_limits<double>::infinity();
  double dual_residual = std::numeric_limits<double>::infinity();
  std::vector<double> iteration_seconds;
  double total_seconds = 0.0;
  bool converged = false;
  std::string abort_reason;  // empty unless a subproblem solve failed
  AdmmState state;
};

// argmax of M . B over matrices with orthonormal columns (U V' from the SVD
// of M). Rank-deficient inputs keep the well-determined directions and
// complete the rest with gram_schmidt_extend.
OrthoMap procrustes_update(const Matrix& m_mat);

// Splitting u_tilde_k = B u_k with a Procrustes B-step.
AdmmReport run_ub(const DroInstance& instance, int m1, const AdmmConfig& cfg = {});
// Lifted variant with C = B and C'B = I carried by multipliers; the B-step
// solves a Sylvester equation.
AdmmReport run_ub_lifted(const DroInstance& instance, int m1, const AdmmConfig& cfg = {});
// Closed-form steps of the lifted variant, exposed for testing. The C-step
// minimizes the augmented Lagrangian over C at fixed B; the B-step over B.
Matrix lifted_c_step(const Matrix& b, const Matrix& lambda_u1, const Matrix& lambda_u2,
                     double rho);
Matrix lifted_b_step(const Matrix& split_lhs, const Matrix& split_rhs, const Matrix& beta,
                     const Matrix& c_map, const Matrix& lambda_u1, const Matrix& lambda_u2,
                     double rho);

// Splitting omega_k = B p_k on the bilinear dual.
AdmmReport run_lb(const DroInstance& instance, int m1, const AdmmConfig& cfg = {});
// B = [B1, B2] with K columns; the moment block covers the first m1. The
// revisited bound is a minimum over maps, so the reported value is the
// smallest fixed-map value found. It is a lower bound on the full optimum
// only at a global minimizer and is not certified as one.
AdmmReport run_rlb(const DroInstance& instance, int m1, const AdmmConfig& cfg = {});

}  // namespace odr
