#include "odr_dro/linalg.hpp"

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "odr_dro/errors.hpp"

namespace odr {
namespace {

Matrix random_matrix(std::mt19937_64& gen, int r, int c) {
  std::normal_distribution<double> nd;
  Matrix m(r, c);
  for (int j = 0; j < c; ++j) {
    for (int i = 0; i < r; ++i) m(i, j) = nd(gen);
  }
  return m;
}

Matrix random_orthonormal(std::mt19937_64& gen, int m, int k) {
  Eigen::HouseholderQR<Matrix> qr(random_matrix(gen, m, k));
  return qr.householderQ() * Matrix::Identity(m, k);
}

TEST(SymEig, OrdersEigenvaluesLargestFirst) {
  Matrix a = Vector((Vector(3) << 1, 3, 2).finished()).asDiagonal();
  const SpectralFactors f = sym_eig(a);
  EXPECT_DOUBLE_EQ(f.lambda(0), 3);
  EXPECT_DOUBLE_EQ(f.lambda(1), 2);
  EXPECT_DOUBLE_EQ(f.lambda(2), 1);
  EXPECT_NEAR(std::abs(f.u(1, 0)), 1.0, 1e-14);
}

TEST(SymEig, IdentityHasUnitSpectrum) {
  const SpectralFactors f = sym_eig(Matrix::Identity(4, 4));
  EXPECT_LT((f.lambda - Vector::Ones(4)).norm(), 1e-14);
  EXPECT_LT((f.u.transpose() * f.u - Matrix::Identity(4, 4)).norm(), 1e-10);
}

TEST(SymEig, ReconstructsRandomSymmetricMatrices) {
  std::mt19937_64 gen(11);
  for (int n = 1; n <= 50; ++n) {
    const Matrix m = random_matrix(gen, n, n);
    const Matrix a = m + m.transpose();
    const SpectralFactors f = sym_eig(a);
    const Matrix rec = f.u * f.lambda.asDiagonal() * f.u.transpose();
    EXPECT_LE((rec - a).norm(), 1e-8 * a.norm()) << "n=" << n;
    EXPECT_LE((f.u.transpose() * f.u - Matrix::Identity(n, n)).norm(), 1e-10);
    for (int i = 1; i < n; ++i) EXPECT_GE(f.lambda(i - 1), f.lambda(i));
  }
}

TEST(SymEig, RejectsNonFiniteInput) {
  Matrix a = Matrix::Identity(2, 2);
  a(0, 1) = a(1, 0) = std::nan("");
  EXPECT_THROW(sym_eig(a), InputError);
}

TEST(Svd, SimpleAndZeroCases) {
  Matrix a = Matrix::Zero(3, 2);
  a(0, 0) = a(1, 1) = 1;
  EXPECT_LT((svd(a).singular - Vector::Ones(2)).norm(), 1e-14);
  EXPECT_EQ(svd(Matrix::Zero(3, 2)).singular.norm(), 0.0);
}

TEST(Svd, ReconstructsRandomMatrix) {
  std::mt19937_64 gen(5);
  const Matrix a = random_matrix(gen, 6, 3);
  const SvdFactors f = svd(a);
  EXPECT_LE((f.left * f.singular.asDiagonal() * f.right.transpose() - a).norm(), 1e-8 * a.norm());
  EXPECT_LE((f.left.transpose() * f.left - Matrix::Identity(3, 3)).norm(), 1e-10);
  EXPECT_LE((f.right.transpose() * f.right - Matrix::Identity(3, 3)).norm(), 1e-10);
}

TEST(MinEigenvalue, SmallCases) {
  Matrix d = Vector((Vector(3) << 1, 3, 2).finished()).asDiagonal();
  EXPECT_NEAR(min_eigenvalue(d), 1.0, 1e-14);
  Matrix swap(2, 2);
  swap << 0, 1, 1, 0;
  EXPECT_NEAR(min_eigenvalue(swap), -1.0, 1e-14);
}

TEST(GramSchmidt, ExtendsSingleVectorToBasis) {
  const Matrix b = gram_schmidt_extend({Vector::Unit(3, 0)}, 3, 3);
  EXPECT_LT((b.col(0) - Vector::Unit(3, 0)).norm(), 1e-15);
  EXPECT_LT((b.transpose() * b - Matrix::Identity(3, 3)).norm(), 1e-12);
}

TEST(GramSchmidt, PlaneBasisSpansInputs) {
  const Vector v1 = (Vector(3) << 1, 1, 0).finished();
  const Vector v2 = (Vector(3) << 1, -1, 0).finished();
  const Matrix b = gram_schmidt_extend({v1, v2}, 2, 3);
  EXPECT_LT((b.transpose() * b - Matrix::Identity(2, 2)).norm(), 1e-12);
  EXPECT_LT((b * b.transpose() * v1 - v1).norm(), 1e-12);
  EXPECT_LT((b * b.transpose() * v2 - v2).norm(), 1e-12);
}

TEST(GramSchmidt, DropsDependentInput) {
  const Vector v = (Vector(3) << 1, 2, 2).finished();
  const Matrix b = gram_schmidt_extend({v, 2.0 * v}, 2, 3);
  EXPECT_LT((b.col(0) - v / 3.0).norm(), 1e-14);
  EXPECT_LT(std::abs(b.col(1).dot(v)), 1e-12);
  EXPECT_NEAR(b.col(1).norm(), 1.0, 1e-14);
}

TEST(GramSchmidt, RejectsTooManyColumns) {
  EXPECT_THROW(gram_schmidt_extend({Vector::Unit(2, 0)}, 3, 2), DimensionError);
}

TEST(ProjectStiefel, Cases) {
  std::mt19937_64 gen(3);
  const Matrix q = random_orthonormal(gen, 6, 2);
  EXPECT_LT((project_stiefel(q) - q).norm(), 1e-12);
  const Matrix two = 2.0 * Matrix::Identity(5, 2);
  EXPECT_LT((project_stiefel(two) - Matrix::Identity(5, 2)).norm(), 1e-14);
  const Matrix p = project_stiefel(random_matrix(gen, 6, 2));
  EXPECT_LT((p.transpose() * p - Matrix::Identity(2, 2)).norm(), 1e-10);
  EXPECT_LT((project_stiefel(p) - p).norm(), 1e-12);
  Matrix deficient = Matrix::Zero(4, 2);
  deficient.col(0) = deficient.col(1) = Vector::Ones(4);
  EXPECT_THROW(project_stiefel(deficient), RankError);
}

TEST(RandomCorrelation, Properties) {
  EXPECT_EQ(random_correlation(1, 4)(0, 0), 1.0);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    for (int n : {2, 5, 13, 40}) {
      const Matrix c = random_correlation(n, seed);
      EXPECT_LT((c.diagonal() - Vector::Ones(n)).cwiseAbs().maxCoeff(), 1e-12);
      EXPECT_GE(min_eigenvalue(c), -1e-10);
      EXPECT_NEAR(c.trace(), n, 1e-12);
      EXPECT_EQ((c - c.transpose()).norm(), 0.0);
    }
  }
  EXPECT_EQ(random_correlation(7, 99), random_correlation(7, 99));
  EXPECT_NE(random_correlation(7, 99), random_correlation(7, 98));
}

TEST(RandomCorrelation, SpectrumIsNotTrivial) {
  // The rotations must preserve the random spectrum up to the trace scaling.
  const Matrix c = random_correlation(6, 2);
  EXPECT_GT(sym_eig(c).lambda(0) - sym_eig(c).lambda(5), 1e-3);
}

// [[I, B], [B', I]] >= 0  <=>  B B' <= I  <=>  B' B <= I
TEST(PsdProperties, SchurComplementPredicatesAgree) {
  std::mt19937_64 gen(21);
  std::uniform_int_distribution<int> dim(1, 10);
  std::uniform_real_distribution<double> scale(0.2, 1.6);
  for (int trial = 0; trial < 200; ++trial) {
    const int m = dim(gen);
    const int m1 = std::uniform_int_distribution<int>(1, m)(gen);
    Matrix b = random_orthonormal(gen, m, m1) * scale(gen);
    Matrix block(m + m1, m + m1);
    block << Matrix::Identity(m, m), b, b.transpose(), Matrix::Identity(m1, m1);
    const bool p1 = min_eigenvalue(block) >= -1e-9;
    const bool p2 = min_eigenvalue(Matrix::Identity(m, m) - b * b.transpose()) >= -1e-9;
    const bool p3 = min_eigenvalue(Matrix::Identity(m1, m1) - b.transpose() * b) >= -1e-9;
    EXPECT_EQ(p1, p2);
    EXPECT_EQ(p2, p3);
  }
}

TEST(PsdProperties, CongruencePreservesOrder) {
  std::mt19937_64 gen(8);
  for (int trial = 0; trial < 100; ++trial) {
    const Matrix g = random_matrix(gen, 5, 5);
    const Matrix y = g * g.transpose();
    const Matrix d = random_matrix(gen, 5, 3);
    const Matrix x = y + d * d.transpose();
    const Matrix v = random_matrix(gen, 5, 4);
    EXPECT_GE(min_eigenvalue(v.transpose() * (x - y) * v), -1e-9);
  }
}

TEST(NumericalRank, CountsAboveCutoff) {
  Matrix a = Matrix::Zero(4, 4);
  a(0, 0) = 1;
  a(1, 1) = 1e-3;
  a(2, 2) = 1e-9;
  EXPECT_EQ(numerical_rank(a), 2);
  EXPECT_EQ(numerical_rank(Matrix::Zero(3, 3)), 0);
}

}  // namespace
}  // namespace odr
