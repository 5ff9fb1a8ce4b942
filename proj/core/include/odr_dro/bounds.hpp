#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "odr_dro/conic.hpp"
#include "odr_dro/model.hpp"
#include "odr_dro/reformulations.hpp"

namespace odr {

struct LowRankFactors {
  Matrix v;      // m x K, orthonormal columns spanning the residual directions
  Matrix y11;    // K x K
  Vector delta;  // V' q
  Matrix nu;     // K x K, column k is V' g_k
};

struct GapBoundTerms {
  std::vector<Matrix> m_k;    // rank-one m x m
  Vector s_k;                 // block scalars at the reduced optimum
  double p_cap = 0.0;
  double s_cap = 0.0;
  std::optional<double> bound;  // empty when undefined
};

struct GapMetrics {
  std::optional<double> gap1;      // (opt - lb) / |opt|, percent
  std::optional<double> gap2;      // (ub - opt) / |opt|, percent
  std::optional<double> interval;  // (ub - lb) / |ub|, percent
};

// Objective value s + gamma2 tr Q + sqrt(gamma1) ||q|| of a full-problem point.
double full_objective(const DroInstance& instance, const FullSolution& point);

// Worst constraint violation of a full-problem point: the largest of the
// equality residual and the negated smallest cone eigenvalue.
double full_violation(const DroInstance& instance, const FullSolution& point);

// Compresses an optimal full solution onto the span of its K residual
// directions. Throws ContractError on an infeasible input or when the
// result loses feasibility or raises the objective.
std::pair<FullSolution, LowRankFactors> low_rank_reduce(const DroInstance& instance,
                                                        const FullSolution& solution,
                                                        double feas_tol = 1e-6);

// Point of the fixed-map lower-bound problem at B = [V, C] that attains the
// full optimum. Throws DimensionError when m1 < K or m1 > m.
std::pair<ReducedSolution, OrthoMap> feasible_from_factors(const DroInstance& instance,
                                                           const FullSolution& reduced_full,
                                                           const LowRankFactors& factors, int m1);

// Packs a reduced lower-bound point into the variable vector of
// build_lb_inner_fixed_b(instance, b), for constraint checks.
Vector pack_reduced(const DroInstance& instance, const ConicProblem& problem,
                    const ReducedSolution& point);
Vector pack_full(const DroInstance& instance, const ConicProblem& problem,
                 const FullSolution& point);

// Gap bound between the full optimum and the lower bound at b, from an
// optimal reduced solution at b. Undefined when the smallest block scalar is
// negative beyond tolerance.
GapBoundTerms gap_bound(const DroInstance& instance, const Matrix& b, const ReducedSolution& red);

// Map whose first column is the whitened direction half' d, completed to m1
// orthonormal columns. Throws InputError for a zero direction.
OrthoMap heuristic_direction(const DroInstance& instance, const Vector& direction, int m1);

GapMetrics gap_metrics(std::optional<double> lower, std::optional<double> upper,
                       std::optional<double> optimal);

}  // namespace odr
