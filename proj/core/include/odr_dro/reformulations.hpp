#pragma once

#include <optional>
#include <vector>

#include "odr_dro/conic.hpp"
#include "odr_dro/model.hpp"

namespace odr {

// Column-orthonormal reduction map; columns [0, split) form B1 and the rest
// B2 in the revisited lower bound.
struct OrthoMap {
  Matrix b;
  int split = -1;  // -1: all columns belong to B1

  int cols() const { return static_cast<int>(b.cols()); }
  int split_point() const { return split < 0 ? cols() : split; }
  Matrix b1() const { return b.leftCols(split_point()); }
  Matrix b2() const { return b.rightCols(cols() - split_point()); }
};

struct FullSolution {
  Vector x;
  double s = 0.0;
  Matrix lambda;  // K x l, row k is lambda_k
  Vector q;
  Matrix q_big;  // m x m
  double objective = 0.0;
};

struct ReducedSolution {
  Vector x;
  double s = 0.0;
  Matrix lambda;   // K x l
  Vector q;        // length m1 (inner lower bound) or m (upper bounds)
  Matrix q_small;  // m1 x m1
  Matrix u;        // K x m1 (u_k or u'_k)
  Matrix u2;       // K x (K - m1), revisited form only
  double objective = 0.0;
};

struct DualCertificate {
  Vector t;                    // K
  Matrix p;                    // K x m1
  std::vector<Matrix> big_p;   // K matrices m1 x m1
  Matrix z;                    // tau x tau (diagonal when the decision LMI is)
  Matrix omega;                // K x m, omega_k = B p_k
  Vector eta;                  // multipliers of decision equalities
  double objective = 0.0;      // value of the maximization
};

// Augmented Lagrangian terms for a split w_k = B v_k:
// sum_k beta_k'(w_k - B v_k) + rho/2 ||w_k - B v_k||^2.
struct SplitPenalty {
  double rho = 10.0;
  Matrix beta;  // K x m
};

// Variable slice names used by every builder: "x", "s", "lambda" (K*l,
// row-major by k), "q" or "q_r", "Q" / "Q_r" / "Q_r'" (svec), "u" (K*m1),
// "u2", dual side "t", "p", "P" (K svecs), "Z" or "z", "omega", "eta".
ConicProblem build_full_sdp(const DroInstance& instance);
ConicProblem build_pca_sdp(const DroInstance& instance, int m1);
ConicProblem build_lb_inner_fixed_b(const DroInstance& instance, const Matrix& b);
// Minimization of the negated bilinear-dual objective with B frozen.
ConicProblem build_lb_dual_fixed_b(const DroInstance& instance, const Matrix& b);
ConicProblem build_ub_fixed_b(const DroInstance& instance, const Matrix& b);
ConicProblem build_rlb_fixed_b(const DroInstance& instance, const Matrix& b1, const Matrix& b2);

// Subproblem (i) of the splitting schemes. The upper-bound form has
// u_tilde_k = q + g_k as expressions and penalizes u_tilde_k - B u_k, with
// the second-moment block carried on the first m1 entries of u_k. The
// lower-bound form carries omega_k as variables and penalizes
// omega_k - B p_k.
ConicProblem build_ub_split(const DroInstance& instance, const Transform& transform,
                            const Matrix& b, int m1, const SplitPenalty& penalty);
ConicProblem build_lb_split(const DroInstance& instance, const Transform& transform,
                            const Matrix& b, const SplitPenalty& penalty);

// Versions reusing a precomputed eigen transform.
ConicProblem build_lb_inner(const DroInstance& instance, const Transform& transform,
                            const Matrix& factor);
ConicProblem build_lb_dual(const DroInstance& instance, const Transform& transform,
                           const Matrix& b);
ConicProblem build_ub_family(const DroInstance& instance, const Transform& transform,
                             const Matrix& b, int m1);

FullSolution extract_full(const DroInstance& instance, const ConicProblem& problem,
                          const ConicSolution& solution);
ReducedSolution extract_reduced(const DroInstance& instance, const ConicProblem& problem,
                                const ConicSolution& solution);
DualCertificate extract_dual(const DroInstance& instance, const Matrix& b,
                             const ConicProblem& problem, const ConicSolution& solution);
// u_tilde_k = q + half'(A' lambda_k - y_k(x)) at a solution of build_ub_split.
Matrix split_u_tilde(const DroInstance& instance, const Transform& transform,
                     const ReducedSolution& solution);

// g_k = half'(A' lambda_k - y_k(x)) for every k, as columns.
Matrix residual_directions(const DroInstance& instance, const Transform& transform,
                           const Vector& x, const Matrix& lambda);

struct FullSolve {
  ConicSolution solution;
  std::optional<FullSolution> full;  // set when the solve is optimal
};
FullSolve solve_full(const DroInstance& instance, const SolverTolerances& tol = {});

struct BoundValue {
  SolveStatus status = SolveStatus::kNumericalFailure;
  double value = 0.0;
  Matrix b;  // the projected map the bound was certified at
  ConicSolution solution;
  bool certified() const { return status == SolveStatus::kOptimal; }
};

// Each projects b onto the Stiefel manifold, then solves the fixed-B problem.
// A bound is only emitted (certified() true) for an optimal solve.
BoundValue certify_lb(const DroInstance& instance, const Matrix& b,
                      const SolverTolerances& tol = {});
BoundValue certify_ub(const DroInstance& instance, const Matrix& b,
                      const SolverTolerances& tol = {});
// b holds [B1, B2] with K columns; the first m1 carry the moment block.
BoundValue certify_rlb(const DroInstance& instance, const Matrix& b, int m1,
                       const SolverTolerances& tol = {});

Matrix pca_map(int m, int m1);

}  // namespace odr
