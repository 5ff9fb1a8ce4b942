#include "odr_dro/reformulations.hpp"

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "odr_dro/applications.hpp"
#include "odr_dro/errors.hpp"
#include "test_util.hpp"

namespace odr {
namespace {

using testing::min_over_branches;
using testing::random_orthonormal;
using testing::rel_tol;

// Small instances mixing both families and both decision-set encodings.
std::vector<DroInstance> small_instances(int count) {
  std::vector<DroInstance> out;
  for (int i = 0; i < count; ++i) {
    const int m = 2 + i % 3;
    out.push_back(i % 2 == 0 ? gen_cvar(m, 100 + i) : gen_newsvendor(m, 100 + i));
  }
  return out;
}

bool has_cone(const ConicProblem& p, ConeKind kind) {
  for (const auto& b : p.cone.blocks) {
    if (b.kind == kind) return true;
  }
  return false;
}

TEST(FullSdp, LowRankCounterexampleValue) {
  const auto branches = low_rank_counterexample();
  const auto best = min_over_branches(branches, [](const DroInstance& in) {
    BoundValue b;
    const FullSolve fs = solve_full(in);
    b.status = fs.solution.status;
    b.value = fs.solution.objective;
    return b;
  });
  EXPECT_NEAR(best.value, 5.9882, 5e-5);
  EXPECT_EQ(best.branch, 1);  // x = [1, 1, 1, 1]
}

TEST(FullSdp, LowRankCounterexampleSolutionStructure) {
  const FullSolve fs = solve_full(low_rank_counterexample()[1]);
  ASSERT_TRUE(fs.full.has_value());
  const FullSolution& sol = *fs.full;
  EXPECT_EQ(numerical_rank(sol.q_big, 1e-4), 2);
  EXPECT_NEAR(sol.q_big(0, 0), 0.0911, 1e-4);
  EXPECT_NEAR(sol.q_big(1, 3), 0.1115, 1e-4);
  EXPECT_NEAR(sol.q_big(0, 2), -0.0354, 1e-4);
}

TEST(FullSdp, CvarCounterexample) {
  const DroInstance in = cvar_pca_counterexample();
  const FullSolve fs = solve_full(in);
  ASSERT_TRUE(fs.full.has_value());
  EXPECT_NEAR(fs.solution.objective, 2.0, 1e-6);
  EXPECT_NEAR(fs.full->x(3), 2.0, 1e-5);
  EXPECT_GE(fs.full->lambda.minCoeff(), -1e-9);
}

TEST(FullSdp, LmisHoldAtSolution) {
  for (const DroInstance& in : small_instances(4)) {
    const FullSolve fs = solve_full(in);
    ASSERT_TRUE(fs.full.has_value()) << in.label;
    const FullSolution& sol = *fs.full;
    const Transform tr = make_transform(in.ambiguity);
    const Matrix g = residual_directions(in, tr, sol.x, sol.lambda);
    for (int k = 0; k < in.k(); ++k) {
      const AffinePiece& pc = in.objective.pieces[k];
      double sk = sol.s - piece_intercept(pc, sol.x) - piece_slope(pc, sol.x).dot(in.ambiguity.mu);
      if (in.support.rows() > 0) {
        sk -= sol.lambda.row(k).dot(in.support.b - in.support.a * in.ambiguity.mu);
      }
      Matrix lmi(in.m() + 1, in.m() + 1);
      lmi(0, 0) = sk;
      lmi.block(1, 0, in.m(), 1) = 0.5 * (sol.q + g.col(k));
      lmi.block(0, 1, 1, in.m()) = lmi.block(1, 0, in.m(), 1).transpose();
      lmi.bottomRightCorner(in.m(), in.m()) = sol.q_big;
      EXPECT_GE(min_eigenvalue(lmi), -1e-7) << in.label << " piece " << k;
    }
    EXPECT_GE(sol.lambda.size() == 0 ? 0.0 : sol.lambda.minCoeff(), -1e-9);
  }
}

TEST(FullSdp, ZeroGamma1DropsNormBlock) {
  const DroInstance in = cvar_pca_counterexample();
  const ConicProblem p = build_full_sdp(in);
  EXPECT_FALSE(has_cone(p, ConeKind::kSecondOrder));
  EXPECT_EQ(p.var_map.at("q").size, 3);
  DroInstance with_norm = in;
  with_norm.ambiguity.gamma1 = 0.5;
  EXPECT_TRUE(has_cone(build_full_sdp(with_norm), ConeKind::kSecondOrder));
}

TEST(PcaSdp, CounterexampleComponents) {
  const DroInstance in = cvar_pca_counterexample();
  // Eigenvalues 3, 2, 1: keep each single component in turn.
  const double expected[] = {1.0, 1.0, 2.0};
  for (int c = 0; c < 3; ++c) {
    Matrix b = Matrix::Zero(3, 1);
    b(c, 0) = 1.0;
    const ConicProblem p = build_lb_inner_fixed_b(in, b);
    const ConicSolution sol = solve(p);
    ASSERT_TRUE(sol.optimal());
    EXPECT_NEAR(sol.objective, expected[c], 1e-6) << "component " << c;
    EXPECT_NEAR(extract_reduced(in, p, sol).x(3), expected[c], 1e-5);
  }
  const ConicSolution largest = solve(build_pca_sdp(in, 1));
  EXPECT_NEAR(largest.objective, 1.0, 1e-6);
}

TEST(PcaSdp, FullDimensionMatchesFullSdp) {
  for (const DroInstance& in : small_instances(3)) {
    const double full = solve(build_full_sdp(in)).objective;
    EXPECT_NEAR(solve(build_pca_sdp(in, in.m())).objective, full, rel_tol(full)) << in.label;
  }
}

TEST(PcaSdp, RejectsOutOfRangeDimension) {
  const DroInstance in = gen_cvar(3, 1);
  EXPECT_THROW(build_pca_sdp(in, 0), DimensionError);
  EXPECT_THROW(build_pca_sdp(in, 4), DimensionError);
}

TEST(PcaSdp, NestedInReducedDimension) {
  for (const DroInstance& in : {gen_cvar(5, 3), gen_newsvendor(5, 4)}) {
    double prev = -std::numeric_limits<double>::infinity();
    for (int m1 = 1; m1 <= 5; ++m1) {
      const ConicSolution sol = solve(build_pca_sdp(in, m1));
      ASSERT_TRUE(sol.optimal());
      EXPECT_GE(sol.objective, prev - rel_tol(prev)) << in.label << " m1=" << m1;
      prev = sol.objective;
    }
  }
}

TEST(LowerBound, PcaMapGivesIdenticalProblem) {
  const DroInstance in = gen_cvar(4, 2);
  const ConicProblem a = build_pca_sdp(in, 2);
  const ConicProblem b = build_lb_inner_fixed_b(in, pca_map(4, 2));
  EXPECT_EQ(a.c, b.c);
  EXPECT_EQ(a.h, b.h);
  EXPECT_EQ(Matrix(a.g), Matrix(b.g));
}

TEST(LowerBound, CounterexampleAtPrintedMap) {
  const Matrix v = low_rank_counterexample_map();
  const auto best = min_over_branches(low_rank_counterexample(),
                                      [&](const DroInstance& in) { return certify_lb(in, v); });
  EXPECT_NEAR(best.value, 5.1139, 5e-5);
  EXPECT_EQ(best.branch, 0);  // x = [1, -7, 1, 1]
}

TEST(LowerBound, IdentityMapGivesFullOptimum) {
  for (const DroInstance& in : small_instances(3)) {
    const double full = solve(build_full_sdp(in)).objective;
    const BoundValue lb = certify_lb(in, Matrix::Identity(in.m(), in.m()));
    ASSERT_TRUE(lb.certified());
    EXPECT_NEAR(lb.value, full, rel_tol(full));
  }
}

TEST(LowerBoundDual, MatchesInnerProblem) {
  std::mt19937_64 gen(5);
  const auto instances = small_instances(10);
  for (const DroInstance& in : instances) {
    const int m1 = 1 + static_cast<int>(gen() % in.m());
    const Matrix b = random_orthonormal(gen, in.m(), m1);
    const ConicSolution primal = solve(build_lb_inner_fixed_b(in, b));
    const ConicProblem dp = build_lb_dual_fixed_b(in, b);
    const ConicSolution dual = solve(dp);
    ASSERT_TRUE(primal.optimal() && dual.optimal()) << in.label;
    const DualCertificate cert = extract_dual(in, b, dp, dual);
    EXPECT_NEAR(cert.objective, primal.objective, rel_tol(primal.objective)) << in.label;
    EXPECT_NEAR(cert.t.sum(), 1.0, 1e-8);
    for (int k = 0; k < in.k(); ++k) {
      Matrix block(m1 + 1, m1 + 1);
      block(0, 0) = cert.t(k);
      block.block(1, 0, m1, 1) = cert.p.row(k).transpose();
      block.block(0, 1, 1, m1) = cert.p.row(k);
      block.bottomRightCorner(m1, m1) = cert.big_p[k];
      EXPECT_GE(min_eigenvalue(block), -1e-7);
    }
    EXPECT_GE(min_eigenvalue(cert.z), -1e-7);
    EXPECT_LT((cert.omega - cert.p * b.transpose()).norm(), 1e-12);
  }
}

TEST(LowerBoundDual, CounterexampleAtPrintedMap) {
  const Matrix v = project_stiefel(low_rank_counterexample_map());
  const DroInstance in = low_rank_counterexample()[0];
  const ConicProblem dp = build_lb_dual_fixed_b(in, v);
  const ConicSolution dual = solve(dp);
  ASSERT_TRUE(dual.optimal());
  EXPECT_NEAR(extract_dual(in, v, dp, dual).objective, 5.1139, 5e-5);
}

TEST(UpperBound, IdentityMapGivesFullOptimum) {
  for (const DroInstance& in : small_instances(3)) {
    const double full = solve(build_full_sdp(in)).objective;
    const BoundValue ub = certify_ub(in, Matrix::Identity(in.m(), in.m()));
    ASSERT_TRUE(ub.certified());
    EXPECT_NEAR(ub.value, full, rel_tol(full));
  }
}

TEST(UpperBound, CounterexampleAtPrintedMap) {
  const Matrix v = low_rank_counterexample_map();
  const auto best = min_over_branches(low_rank_counterexample(),
                                      [&](const DroInstance& in) { return certify_ub(in, v); });
  EXPECT_NEAR(best.value, 5.9882, 5e-5);
  EXPECT_TRUE(best.all_certified_or_infeasible);
}

TEST(UpperBound, ReducedSolutionSatisfiesEqualities) {
  const DroInstance in = gen_cvar(4, 11);
  std::mt19937_64 gen(1);
  const Matrix b = random_orthonormal(gen, 4, in.k());
  const ConicProblem p = build_ub_fixed_b(in, b);
  const ConicSolution sol = solve(p);
  ASSERT_TRUE(sol.optimal());
  const ReducedSolution r = extract_reduced(in, p, sol);
  const Matrix u_tilde = split_u_tilde(in, make_transform(in.ambiguity), r);
  EXPECT_LT((u_tilde - r.u * b.transpose()).norm(), 1e-6);
}

TEST(RevisitedLowerBound, FullSplitMatchesUpperBound) {
  const DroInstance in = gen_cvar(3, 21);
  std::mt19937_64 gen(2);
  const Matrix b = random_orthonormal(gen, 3, in.k());
  const ConicSolution ub = solve(build_ub_fixed_b(in, b));
  const ConicSolution rlb = solve(build_rlb_fixed_b(in, b, Matrix(3, 0)));
  ASSERT_TRUE(ub.optimal() && rlb.optimal());
  EXPECT_NEAR(ub.objective, rlb.objective, rel_tol(ub.objective));
}

TEST(RevisitedLowerBound, EmptyMomentBlock) {
  const DroInstance in = gen_cvar(3, 22);
  std::mt19937_64 gen(3);
  const Matrix b = random_orthonormal(gen, 3, in.k());
  const ConicProblem p = build_rlb_fixed_b(in, Matrix(3, 0), b);
  EXPECT_EQ(p.var_map.at("Q_r'").size, 0);
  // Only the decision-set rows, lambda and the scalar block rows are Nonneg.
  for (const auto& blk : p.cone.blocks) EXPECT_NE(blk.kind, ConeKind::kPsd);
  const ConicSolution sol = solve(p);
  ASSERT_TRUE(sol.optimal());
  const double full = solve(build_full_sdp(in)).objective;
  EXPECT_LE(sol.objective, full + rel_tol(full));
}

TEST(RevisitedLowerBound, PartialSplitBelowFull) {
  std::mt19937_64 gen(4);
  for (const DroInstance& in : {gen_cvar(3, 31), gen_cvar(4, 32), gen_newsvendor(3, 33)}) {
    const Matrix b = random_orthonormal(gen, in.m(), in.k());
    const BoundValue rlb = certify_rlb(in, b, 1);
    if (!rlb.certified()) {
      EXPECT_EQ(rlb.status, SolveStatus::kPrimalInfeasible) << in.label;
      continue;
    }
    const double full = solve(build_full_sdp(in)).objective;
    EXPECT_LE(rlb.value, full + rel_tol(full)) << in.label;
  }
}

TEST(RevisitedLowerBound, RejectsWrongColumnCount) {
  const DroInstance in = gen_cvar(3, 1);
  EXPECT_THROW(build_rlb_fixed_b(in, Matrix::Identity(3, 1), Matrix::Identity(3, 2)), DimensionError);
  EXPECT_THROW(certify_rlb(in, Matrix::Identity(3, 3), 1), DimensionError);
}

TEST(Certification, SandwichOnRandomMaps) {
  std::mt19937_64 gen(6);
  const auto instances = small_instances(20);
  int ub_certified = 0;
  for (const DroInstance& in : instances) {
    const double full = solve(build_full_sdp(in)).objective;
    const int m1 = 1 + static_cast<int>(gen() % in.m());
    // Unnormalized input: certification projects onto orthonormal columns.
    const Matrix raw = testing::random_matrix(gen, in.m(), m1);
    const BoundValue lb = certify_lb(in, raw);
    ASSERT_TRUE(lb.certified()) << in.label;
    EXPECT_LE(lb.value, full + rel_tol(full)) << in.label;
    EXPECT_LT((lb.b.transpose() * lb.b - Matrix::Identity(m1, m1)).norm(), 1e-9);
    const BoundValue ub = certify_ub(in, testing::random_matrix(gen, in.m(), in.k()));
    if (ub.certified()) {
      ++ub_certified;
      EXPECT_GE(ub.value, full - rel_tol(full)) << in.label;
    } else {
      EXPECT_EQ(ub.status, SolveStatus::kPrimalInfeasible) << in.label;
    }
  }
  // Box supports make every cvar map feasible.
  EXPECT_GE(ub_certified, 10);
}

TEST(Certification, PcaColumnsReproducePcaValue) {
  const DroInstance in = gen_cvar(4, 7);
  const double pca = solve(build_pca_sdp(in, 2)).objective;
  EXPECT_NEAR(certify_lb(in, pca_map(4, 2)).value, pca, 1e-9 * (1 + std::abs(pca)));
}

// Rank-limited PSD X: X <= I exactly when B'XB <= I for every orthonormal
// m x m1 map; the top-eigenvector map is the witness for the converse.
TEST(RankEquivalence, CompressionsDecidePsdOrder) {
  std::mt19937_64 gen(9);
  std::uniform_int_distribution<int> dim(1, 8);
  std::uniform_real_distribution<double> scale(0.3, 1.7);
  for (int trial = 0; trial < 100; ++trial) {
    const int m = dim(gen);
    const int m1 = std::uniform_int_distribution<int>(1, m)(gen);
    const int rank = std::uniform_int_distribution<int>(1, m1)(gen);
    const Matrix f = testing::random_matrix(gen, m, rank);
    Matrix x = f * f.transpose();
    x *= scale(gen) / sym_eig(x).lambda(0);
    const bool below = min_eigenvalue(Matrix::Identity(m, m) - x) >= -1e-9;
    bool all_compressions = true;
    std::vector<Matrix> maps;
    for (int j = 0; j < 50; ++j) maps.push_back(random_orthonormal(gen, m, m1));
    maps.push_back(sym_eig(x).u.leftCols(m1));
    for (const Matrix& b : maps) {
      if (min_eigenvalue(Matrix::Identity(m1, m1) - b.transpose() * x * b) < -1e-9) {
        all_compressions = false;
      }
    }
    EXPECT_EQ(below, all_compressions) << "trial " << trial;
  }
}

}  // namespace
}  // namespace odr
