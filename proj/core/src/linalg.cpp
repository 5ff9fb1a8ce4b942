#include "odr_dro/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "odr_dro/errors.hpp"
#include "odr_dro/rng.hpp"

namespace odr {

namespace {

void require_finite(const Matrix& a, const char* what) {
  if (!a.allFinite()) throw InputError(std::string(what) + ": non-finite entry");
}

constexpr double kDropTol = 1e-10;

}  // namespace

Matrix symmetrize(const Matrix& a) { return 0.5 * (a + a.transpose()); }

SpectralFactors sym_eig(const Matrix& a) {
  require_finite(a, "sym_eig");
  if (a.rows() != a.cols()) throw DimensionError("sym_eig: matrix not square");
  const Eigen::Index n = a.rows();
  Eigen::SelfAdjointEigenSolver<Matrix> es(a, Eigen::ComputeEigenvectors);
  SpectralFactors f;
  f.u.resize(n, n);
  f.lambda.resize(n);
  // Descending order; ties keep the solver's order so that a multiple of the
  // identity maps to the canonical basis. Signs: largest entry positive.
  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index i, Eigen::Index j) {
    return es.eigenvalues()(i) > es.eigenvalues()(j);
  });
  for (Eigen::Index i = 0; i < n; ++i) {
    f.lambda(i) = es.eigenvalues()(order[i]);
    Vector v = es.eigenvectors().col(order[i]);
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0) v = -v;
    f.u.col(i) = v;
  }
  f.sqrt_lambda = f.lambda.cwiseMax(0.0).cwiseSqrt();
  return f;
}

SvdFactors svd(const Matrix& a) {
  require_finite(a, "svd");
  Eigen::BDCSVD<Matrix> solver(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  return {solver.matrixU(), solver.singularValues(), solver.matrixV()};
}

double min_eigenvalue(const Matrix& a) {
  if (a.size() == 0) return 0.0;
  if (a.rows() == 1) return a(0, 0);
  Eigen::SelfAdjointEigenSolver<Matrix> es(a, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

bool is_psd(const Matrix& a, double tol) {
  const double scale = a.norm();
  if (scale == 0.0) return true;
  return min_eigenvalue(a / scale) >= -tol;
}

Matrix gram_schmidt_extend(const std::vector<Vector>& vectors, int target_cols,
                           int m) {
  if (target_cols > m || target_cols < 0) {
    throw DimensionError("gram_schmidt_extend: target_cols exceeds dimension");
  }
  Matrix basis(m, target_cols);
  int cols = 0;
  auto residual = [&](const Vector& v) {
    Vector r = v;
    // Two passes of classical projection keep orthogonality at machine level.
    for (int pass = 0; pass < 2; ++pass) {
      if (cols > 0) r -= basis.leftCols(cols) * (basis.leftCols(cols).transpose() * r);
    }
    return r;
  };
  for (const Vector& v : vectors) {
    if (v.size() != m) throw DimensionError("gram_schmidt_extend: length mismatch");
    if (!v.allFinite()) throw InputError("gram_schmidt_extend: non-finite input");
    const double norm = v.norm();
    if (norm == 0.0) continue;
    Vector r = residual(v);
    if (r.norm() <= kDropTol * norm) continue;
    if (cols == target_cols) {
      throw DimensionError("gram_schmidt_extend: inputs span more than target_cols");
    }
    basis.col(cols++) = r / r.norm();
  }
  // Complete with the canonical direction that is least covered so far.
  while (cols < target_cols) {
    int best = -1;
    double best_norm = -1.0;
    Vector best_r;
    for (int i = 0; i < m; ++i) {
      Vector r = residual(Vector::Unit(m, i));
      const double rn = r.norm();
      if (rn > best_norm + 1e-12) {
        best = i;
        best_norm = rn;
        best_r = r;
      }
    }
    (void)best;
    basis.col(cols++) = best_r / best_norm;
  }
  return basis;
}

Matrix gram_schmidt_extend(const Matrix& columns, int target_cols) {
  std::vector<Vector> v;
  v.reserve(columns.cols());
  for (Eigen::Index j = 0; j < columns.cols(); ++j) v.emplace_back(columns.col(j));
  return gram_schmidt_extend(v, target_cols, static_cast<int>(columns.rows()));
}

Matrix project_stiefel(const Matrix& b) {
  if (b.cols() > b.rows()) throw DimensionError("project_stiefel: more columns than rows");
  if (b.cols() == 0) return Matrix(b.rows(), 0);
  const SvdFactors f = svd(b);
  const double smax = f.singular(0);
  const double smin = f.singular(f.singular.size() - 1);
  if (!(smax > 0.0) || smin <= 1e-10 * smax) {
    throw RankError("project_stiefel: matrix is numerically rank deficient");
  }
  return f.left * f.right.transpose();
}

Matrix random_correlation(int n, std::uint64_t seed) {
  if (n < 1) throw DimensionError("random_correlation: n must be positive");
  if (n == 1) return Matrix::Ones(1, 1);
  Rng spectrum_rng(seed, "randcorr/spectrum");
  Rng rotation_rng(seed, "randcorr/rotation");

  Vector eig(n);
  for (int i = 0; i < n; ++i) eig(i) = spectrum_rng.uniform();
  eig *= static_cast<double>(n) / eig.sum();

  // Haar orthogonal matrix from QR of a Gaussian matrix with sign fix.
  Matrix g(n, n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) g(i, j) = rotation_rng.normal();
  }
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ();
  const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < n; ++j) {
    if (r(j, j) < 0) q.col(j) = -q.col(j);
  }
  Matrix a = q * eig.asDiagonal() * q.transpose();
  a = symmetrize(a);

  // Each rotation in the (i, j) plane sets a_ii to exactly one; the trace
  // stays n so a partner on the other side of one always exists.
  for (int step = 0; step < n - 1; ++step) {
    int i = -1;
    for (int k = 0; k < n; ++k) {
      if (std::abs(a(k, k) - 1.0) > 1e-15) {
        i = k;
        break;
      }
    }
    if (i < 0) break;
    int j = -1;
    for (int k = i + 1; k < n; ++k) {
      if ((a(i, i) - 1.0) * (a(k, k) - 1.0) < 0.0) {
        j = k;
        break;
      }
    }
    if (j < 0) break;
    const double aii = a(i, i), ajj = a(j, j), aij = a(i, j);
    const double disc = std::sqrt(aij * aij - (aii - 1.0) * (ajj - 1.0));
    const double denom = aij + std::copysign(disc, aij == 0.0 ? 1.0 : aij);
    const double t = (aii - 1.0) / denom;
    const double c = 1.0 / std::sqrt(1.0 + t * t);
    const double s = c * t;
    // a <- G^T a G with G = [c s; -s c] acting on rows/cols i, j.
    Vector ci = a.col(i), cj = a.col(j);
    a.col(i) = c * ci - s * cj;
    a.col(j) = s * ci + c * cj;
    Vector ri = a.row(i).transpose(), rj = a.row(j).transpose();
    a.row(i) = (c * ri - s * rj).transpose();
    a.row(j) = (s * ri + c * rj).transpose();
    a(i, i) = 1.0;
  }
  a = symmetrize(a);
  a.diagonal().setOnes();
  return a;
}

int numerical_rank(const Matrix& a, double rel_tol) {
  if (a.size() == 0) return 0;
  const Vector s = svd(a).singular;
  if (s(0) == 0.0) return 0;
  int r = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) > rel_tol * s(0)) ++r;
  }
  return r;
}

}  // namespace odr
