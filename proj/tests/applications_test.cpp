#include "odr_dro/applications.hpp"

#include <numeric>

#include <gtest/gtest.h>

#include "odr_dro/errors.hpp"
#include "odr_dro/instance_io.hpp"
#include "odr_dro/reformulations.hpp"

namespace odr {
namespace {

TEST(Newsvendor, PriceScheduleFirstProduct) {
  const NewsvendorParams p = NewsvendorParams::schedule(3);
  EXPECT_DOUBLE_EQ(p.c(0), 0.5);
  EXPECT_DOUBLE_EQ(p.v(0), 0.75);
  EXPECT_DOUBLE_EQ(p.g(0), 0.25);
  EXPECT_DOUBLE_EQ(p.c(2), 0.7);
}

TEST(Newsvendor, PieceStructure) {
  const DroInstance in = gen_newsvendor(4, 1);
  const NewsvendorParams p = NewsvendorParams::schedule(4);
  ASSERT_EQ(in.k(), 2);
  EXPECT_EQ(in.n(), 4);
  EXPECT_EQ(in.support.rows(), 0);
  EXPECT_EQ(in.objective.pieces[0].w.norm(), 0.0);
  EXPECT_EQ(in.objective.pieces[0].d.norm(), 0.0);
  EXPECT_EQ(in.objective.pieces[0].w0, p.c - p.v);
  EXPECT_EQ(in.objective.pieces[1].d, p.g - p.v);
  EXPECT_EQ(in.objective.pieces[1].w0, p.c - p.g);
  EXPECT_TRUE(in.decisions.diagonal());
  EXPECT_EQ(in.decisions.tau(), 4);
}

TEST(Newsvendor, RejectsBadPricesAndDimensions) {
  NewsvendorParams p = NewsvendorParams::schedule(2);
  MomentAmbiguity amb;
  amb.mu = Vector::Ones(2);
  amb.sigma = Matrix::Identity(2, 2);
  p.g(1) = p.c(1);
  EXPECT_THROW(build_newsvendor(p, amb), InputError);
  p = NewsvendorParams::schedule(2);
  amb.mu = Vector::Ones(3);
  EXPECT_THROW(build_newsvendor(p, amb), DimensionError);
}

TEST(Newsvendor, NonnegativeDemandFlag) {
  NewsvendorParams p = NewsvendorParams::schedule(3);
  p.nonnegative_demand = true;
  MomentAmbiguity amb;
  amb.mu = Vector::Ones(3);
  amb.sigma = Matrix::Identity(3, 3);
  const DroInstance in = build_newsvendor(p, amb);
  EXPECT_EQ(in.support.rows(), 3);
  EXPECT_TRUE(validate(in).ok());
}

TEST(Generators, SeededDeterminism) {
  EXPECT_EQ(instance_to_json(gen_newsvendor(6, 5)), instance_to_json(gen_newsvendor(6, 5)));
  EXPECT_EQ(instance_to_json(gen_cvar(6, 5)), instance_to_json(gen_cvar(6, 5)));
  EXPECT_NE(instance_to_json(gen_cvar(6, 5)), instance_to_json(gen_cvar(6, 6)));
}

TEST(Generators, CovarianceHasCorrelationCore) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const DroInstance in = gen_newsvendor(7, seed);
    const Vector sd = in.ambiguity.sigma.diagonal().cwiseSqrt();
    EXPECT_GE(sd.minCoeff(), 1.0);
    EXPECT_LE(sd.maxCoeff(), 2.0);
    const Matrix core = sd.cwiseInverse().asDiagonal() * in.ambiguity.sigma * sd.cwiseInverse().asDiagonal();
    EXPECT_LT((core.diagonal() - Vector::Ones(7)).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_GE(min_eigenvalue(in.ambiguity.sigma), 0.0);
    EXPECT_GE(in.ambiguity.mu.minCoeff(), 0.0);
    EXPECT_LE(in.ambiguity.mu.maxCoeff(), 10.0);
  }
}

TEST(Generators, CvarBoxSupport) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const DroInstance in = gen_cvar(5, seed);
    EXPECT_EQ(in.support.rows(), 10);
    const Vector slack = in.support.b - in.support.a * in.ambiguity.mu;
    EXPECT_GT(slack.minCoeff(), 0.0);
    // Half-width is twice the standard deviation.
    const Vector sd = in.ambiguity.sigma.diagonal().cwiseSqrt();
    EXPECT_LT((slack.head(5) - 2.0 * sd).norm(), 1e-12);
    EXPECT_GE(in.ambiguity.mu.minCoeff(), -5.0);
    EXPECT_LE(in.ambiguity.mu.maxCoeff(), 5.0);
  }
}

TEST(Cvar, PieceCoefficients) {
  CvarParams p;
  p.m = 2;
  p.alpha = 0.25;
  MomentAmbiguity amb;
  amb.mu = Vector::Zero(2);
  amb.sigma = Matrix::Identity(2, 2);
  const DroInstance in = build_cvar(p, amb);
  EXPECT_EQ(in.n(), 3);
  EXPECT_DOUBLE_EQ(in.objective.pieces[0].w0(2), 1.0);
  EXPECT_DOUBLE_EQ(in.objective.pieces[1].w0(2), 1.0 - 4.0);
  EXPECT_DOUBLE_EQ(in.objective.pieces[1].w(1, 1), 4.0);
  p.alpha = 1.0 - 1e-12;
  EXPECT_NEAR(build_cvar(p, amb).objective.pieces[1].w0(2), 0.0, 1e-11);
  p.alpha = 1.0;
  EXPECT_THROW(build_cvar(p, amb), InputError);
  p.alpha = 0.0;
  EXPECT_THROW(build_cvar(p, amb), InputError);
}

TEST(Cvar, PcaCounterexampleFullValue) {
  const DroInstance in = cvar_pca_counterexample();
  const FullSolve fs = solve_full(in);
  ASSERT_TRUE(fs.full.has_value());
  EXPECT_NEAR(fs.solution.objective, 2.0, 1e-6);
  EXPECT_NEAR(fs.full->x(3), 2.0, 1e-5);
}

TEST(Cvar, SymmetricAssetsSplitEvenly) {
  CvarParams p;
  p.m = 2;
  MomentAmbiguity amb;
  amb.mu = Vector::Constant(2, 1.0);
  amb.sigma = 2.0 * Matrix::Identity(2, 2);
  DroInstance in = build_cvar(p, amb);
  in.support = box_support(Vector::Constant(2, -2.0), Vector::Constant(2, 4.0));
  const FullSolve fs = solve_full(in);
  ASSERT_TRUE(fs.full.has_value());
  EXPECT_NEAR(fs.full->x(0), 0.5, 1e-6);
  EXPECT_NEAR(fs.full->x(1), 0.5, 1e-6);
}

TEST(Cvar, OptimumInvariantUnderAssetPermutation) {
  const DroInstance in = gen_cvar(4, 8);
  const std::vector<int> perm = {2, 0, 3, 1};
  Eigen::PermutationMatrix<Eigen::Dynamic> pm(4);
  for (int i = 0; i < 4; ++i) pm.indices()(i) = perm[i];
  const Matrix p = Matrix(pm);
  CvarParams params;
  params.m = 4;
  MomentAmbiguity amb = in.ambiguity;
  amb.mu = p * in.ambiguity.mu;
  amb.sigma = p * in.ambiguity.sigma * p.transpose();
  DroInstance permuted = build_cvar(params, amb);
  const Vector sd = amb.sigma.diagonal().cwiseSqrt();
  permuted.support = box_support(amb.mu - 2.0 * sd, amb.mu + 2.0 * sd);
  const FullSolve a = solve_full(in), b = solve_full(permuted);
  ASSERT_TRUE(a.full && b.full);
  EXPECT_NEAR(a.solution.objective, b.solution.objective, 1e-6 * (1 + std::abs(a.solution.objective)));
}

TEST(Newsvendor, GeneratedOptimumIsNonpositive) {
  const FullSolve fs = solve_full(gen_newsvendor(10, 1));
  ASSERT_TRUE(fs.full.has_value());
  EXPECT_LE(fs.solution.objective, 0.0);
}

}  // namespace
}  // namespace odr
