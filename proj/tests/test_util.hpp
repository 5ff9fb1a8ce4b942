#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include <Eigen/QR>

#include "odr_dro/linalg.hpp"
#include "odr_dro/model.hpp"
#include "odr_dro/reformulations.hpp"

namespace odr::testing {

inline Matrix random_matrix(std::mt19937_64& gen, int r, int c) {
  std::normal_distribution<double> nd;
  Matrix m(r, c);
  for (int j = 0; j < c; ++j) {
    for (int i = 0; i < r; ++i) m(i, j) = nd(gen);
  }
  return m;
}

inline Matrix random_orthonormal(std::mt19937_64& gen, int m, int k) {
  Eigen::HouseholderQR<Matrix> qr(random_matrix(gen, m, k));
  return qr.householderQ() * Matrix::Identity(m, k);
}

// Minimum over discrete-branch fixtures; infeasible branches count as +inf.
struct BranchMin {
  double value = std::numeric_limits<double>::infinity();
  int branch = -1;
  bool all_certified_or_infeasible = true;
};

template <typename Fn>
BranchMin min_over_branches(const std::vector<DroInstance>& branches, Fn bound) {
  BranchMin out;
  for (int i = 0; i < static_cast<int>(branches.size()); ++i) {
    const BoundValue b = bound(branches[i]);
    if (b.certified()) {
      if (b.value < out.value) {
        out.value = b.value;
        out.branch = i;
      }
    } else if (b.status != SolveStatus::kPrimalInfeasible) {
      out.all_certified_or_infeasible = false;
    }
  }
  return out;
}

inline double rel_tol(double scale, double tol = 1e-6) { return tol * (1.0 + std::abs(scale)); }

}  // namespace odr::testing
