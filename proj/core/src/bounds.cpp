#include "odr_dro/bounds.hpp"

#include <cmath>
#include <map>
#include <string>

#include "odr_dro/errors.hpp"

namespace odr {
namespace {

Vector flatten_rows(const Matrix& a) {
  Vector out(a.size());
  for (int r = 0; r < a.rows(); ++r) {
    for (int c = 0; c < a.cols(); ++c) out(r * a.cols() + c) = a(r, c);
  }
  return out;
}

Vector pack(const ConicProblem& problem, const std::map<std::string, Vector>& values) {
  Vector out = Vector::Zero(problem.num_vars());
  for (const auto& [name, slice] : problem.var_map) {
    const auto it = values.find(name);
    if (it == values.end()) throw ContractError("pack: no value for variable " + name);
    if (it->second.size() != slice.size) throw DimensionError("pack: wrong length for " + name);
    out.segment(slice.offset, slice.size) = it->second;
  }
  return out;
}

Vector block_scalars(const DroInstance& instance, double s, const Vector& x, const Matrix& lambda) {
  const int k = instance.k();
  const Vector& mu = instance.ambiguity.mu;
  Vector out(k);
  for (int kk = 0; kk < k; ++kk) {
    const AffinePiece& piece = instance.objective.pieces[kk];
    double v = s - piece_intercept(piece, x) - piece_slope(piece, x).dot(mu);
    if (instance.support.rows() > 0) {
      v -= lambda.row(kk).dot(instance.support.b - instance.support.a * mu);
    }
    out(kk) = v;
  }
  return out;
}

double norm_term(const DroInstance& instance, const Vector& q) {
  return std::sqrt(instance.ambiguity.gamma1) * q.norm();
}

}  // namespace

Vector pack_full(const DroInstance& instance, const ConicProblem& problem, const FullSolution& point) {
  std::map<std::string, Vector> v;
  v["x"] = point.x;
  v["s"] = Vector::Constant(1, point.s);
  v["lambda"] = flatten_rows(point.lambda);
  v["q"] = point.q;
  v["Q"] = svec(point.q_big);
  v["norm_epigraph"] = Vector::Constant(1, point.q.norm());
  (void)instance;
  return pack(problem, v);
}

Vector pack_reduced(const DroInstance& instance, const ConicProblem& problem,
                    const ReducedSolution& point) {
  std::map<std::string, Vector> v;
  v["x"] = point.x;
  v["s"] = Vector::Constant(1, point.s);
  v["lambda"] = flatten_rows(point.lambda);
  v["q"] = v["q_r"] = point.q;
  v["Q"] = v["Q_r"] = svec(point.q_small);
  v["norm_epigraph"] = Vector::Constant(1, point.q.norm());
  (void)instance;
  return pack(problem, v);
}

double full_objective(const DroInstance& instance, const FullSolution& point) {
  return point.s + instance.ambiguity.gamma2 * point.q_big.trace() + norm_term(instance, point.q);
}

double full_violation(const DroInstance& instance, const FullSolution& point) {
  const ConicProblem problem = build_full_sdp(instance);
  return constraint_violation(problem, pack_full(instance, problem, point));
}

std::pair<FullSolution, LowRankFactors> low_rank_reduce(const DroInstance& instance,
                                                        const FullSolution& solution,
                                                        double feas_tol) {
  const int m = instance.m(), k = instance.k();
  if (k >= m) throw DimensionError("low_rank_reduce: needs K < m");
  const double scale = 1.0 + std::abs(full_objective(instance, solution));
  const double before = full_violation(instance, solution);
  if (before > feas_tol * scale) {
    throw ContractError("low_rank_reduce: input violates constraints by " + std::to_string(before));
  }
  const Transform tr = make_transform(instance.ambiguity);
  const Matrix g = residual_directions(instance, tr, solution.x, solution.lambda);
  LowRankFactors f;
  f.v = gram_schmidt_extend(g, k);
  f.nu = f.v.transpose() * g;
  f.delta = f.v.transpose() * solution.q;
  f.y11 = symmetrize(f.v.transpose() * solution.q_big * f.v);

  FullSolution out = solution;
  out.q = f.v * f.delta;
  out.q_big = symmetrize(f.v * f.y11 * f.v.transpose());
  out.objective = full_objective(instance, out);

  const double after = full_violation(instance, out);
  if (after > std::max(before, feas_tol * scale)) {
    throw ContractError("low_rank_reduce: reduced point violates constraints by " +
                        std::to_string(after));
  }
  if (out.objective > full_objective(instance, solution) + 1e-9 * scale) {
    throw ContractError("low_rank_reduce: objective increased");
  }
  return {out, f};
}

std::pair<ReducedSolution, OrthoMap> feasible_from_factors(const DroInstance& instance,
                                                           const FullSolution& reduced_full,
                                                           const LowRankFactors& factors, int m1) {
  const int k = static_cast<int>(factors.v.cols());
  if (m1 < k) throw DimensionError("feasible_from_factors: m1 must be at least K");
  if (m1 > instance.m()) throw DimensionError("feasible_from_factors: m1 exceeds m");
  OrthoMap map;
  map.b = Matrix(instance.m(), m1);
  map.b.leftCols(k) = factors.v;
  if (m1 > k) map.b.rightCols(m1 - k) = gram_schmidt_extend(factors.v, m1).rightCols(m1 - k);

  ReducedSolution out;
  out.x = reduced_full.x;
  out.s = reduced_full.s;
  out.lambda = reduced_full.lambda;
  out.q = Vector::Zero(m1);
  out.q.head(k) = factors.delta;
  out.q_small = Matrix::Zero(m1, m1);
  out.q_small.topLeftCorner(k, k) = factors.y11;
  out.objective = out.s + instance.ambiguity.gamma2 * factors.y11.trace() +
                  norm_term(instance, factors.delta);
  return {out, map};
}

GapBoundTerms gap_bound(const DroInstance& instance, const Matrix& b, const ReducedSolution& red) {
  if (b.rows() != instance.m() || b.cols() != red.q.size()) {
    throw DimensionError("gap_bound: map and reduced solution disagree");
  }
  const Transform tr = make_transform(instance.ambiguity);
  const Matrix g = residual_directions(instance, tr, red.x, red.lambda);
  const Vector lifted = b * red.q;
  GapBoundTerms out;
  for (int kk = 0; kk < instance.k(); ++kk) {
    const Vector w = lifted + g.col(kk);
    out.m_k.push_back(w * w.transpose());
    out.p_cap += 0.25 * instance.ambiguity.gamma2 * w.squaredNorm();
  }
  out.s_k = block_scalars(instance, red.s, red.x, red.lambda);
  out.s_cap = out.s_k.minCoeff();
  // Feasible points have S >= 0; solver noise below the tolerance is clipped.
  const double noise = 1e-7 * (1.0 + std::abs(red.s));
  if (out.s_cap < -noise) return out;
  const double s_cap = std::max(out.s_cap, 0.0);
  const double root = std::sqrt(out.p_cap);
  out.bound = root < s_cap ? out.p_cap / s_cap : 2.0 * root - s_cap;
  return out;
}

OrthoMap heuristic_direction(const DroInstance& instance, const Vector& direction, int m1) {
  if (direction.size() != instance.m()) throw DimensionError("heuristic_direction: wrong length");
  if (m1 < 1 || m1 > instance.m()) throw DimensionError("heuristic_direction: m1 out of range");
  const Transform tr = make_transform(instance.ambiguity);
  const Vector r = tr.half.transpose() * direction;
  if (!(r.norm() > 0.0)) throw InputError("heuristic_direction: zero direction");
  OrthoMap out;
  out.b = gram_schmidt_extend(std::vector<Vector>{r / r.norm()}, m1, instance.m());
  return out;
}

GapMetrics gap_metrics(std::optional<double> lower, std::optional<double> upper,
                       std::optional<double> optimal) {
  GapMetrics out;
  const auto ratio = [](double num, double den) -> std::optional<double> {
    if (den == 0.0 || !std::isfinite(num) || !std::isfinite(den)) return std::nullopt;
    return num / std::abs(den) * 100.0;
  };
  if (optimal && lower) out.gap1 = ratio(*optimal - *lower, *optimal);
  if (optimal && upper) out.gap2 = ratio(*upper - *optimal, *optimal);
  if (lower && upper) out.interval = ratio(*upper - *lower, *upper);
  return out;
}

}  // namespace odr
