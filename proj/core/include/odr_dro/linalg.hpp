#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace odr {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct SpectralFactors {
  Matrix u;
  Vector lambda;       // nonincreasing
  Vector sqrt_lambda;  // elementwise sqrt, negative eigenvalues clipped to 0
};

struct SvdFactors {
  Matrix left;
  Vector singular;  // nonincreasing
  Matrix right;
};

// Eigendecomposition of a symmetric matrix with eigenvalues sorted largest
// first. Only the lower triangle is read.
SpectralFactors sym_eig(const Matrix& a);

// Thin SVD, singular values largest first.
SvdFactors svd(const Matrix& a);

double min_eigenvalue(const Matrix& a);

// True when min_eigenvalue(a / ||a||_F) >= -tol. The zero matrix is PSD.
bool is_psd(const Matrix& a, double tol = 1e-8);

// Orthonormal m x target_cols matrix whose span contains the inputs. Inputs
// whose residual after projection falls to 1e-10 of their norm are dropped;
// the remaining columns are filled from the canonical basis.
Matrix gram_schmidt_extend(const std::vector<Vector>& vectors, int target_cols,
                           int m);
Matrix gram_schmidt_extend(const Matrix& columns, int target_cols);

// Nearest matrix with orthonormal columns (polar factor U V^T).
// Throws RankError when sigma_min <= 1e-10 sigma_max.
Matrix project_stiefel(const Matrix& b);

// Bendel-Mickey random correlation matrix: random spectrum scaled to sum n,
// random orthogonal similarity, then Givens rotations to unit diagonal.
Matrix random_correlation(int n, std::uint64_t seed);

// Numerical rank with cutoff sigma > rel_tol * sigma_max.
int numerical_rank(const Matrix& a, double rel_tol = 1e-6);

Matrix symmetrize(const Matrix& a);

}  // namespace odr
