#pragma once

#include <cstdint>
#include <vector>

#include "odr_dro/model.hpp"

namespace odr {

// Wholesale c, retail v and salvage g prices per product.
struct NewsvendorParams {
  int m = 0;
  Vector c, v, g;
  bool nonnegative_demand = false;  // support xi >= 0 instead of R^m

  // c_i = 0.1 (4 + i), v_i = 0.15 (4 + i), g_i = 0.05 (4 + i) for i = 1..m.
  static NewsvendorParams schedule(int m);
};

struct CvarParams {
  int m = 0;
  double alpha = 0.05;
  double half_width = 2.0;  // support box mu +- half_width * sigma
};

// Two-piece cost: (c - v)'x when demand is short of stock is not binding,
// (c - g)'x + (g - v)'xi otherwise. X is the nonnegative orthant.
DroInstance build_newsvendor(const NewsvendorParams& params, const MomentAmbiguity& ambiguity);

// Decision vector (x, t) of length m + 1; X = {x >= 0, sum x = 1}, t free.
// The support is left empty; callers set it (gen_cvar uses a box).
DroInstance build_cvar(const CvarParams& params, const MomentAmbiguity& ambiguity);

// mu ~ U[0, 10]^m, sigma ~ U[1, 2]^m, Sigma = diag(sigma) R diag(sigma)
// with R a random correlation matrix, support R^m.
DroInstance gen_newsvendor(int m, std::uint64_t seed);
// mu ~ U[-5, 5]^m, sigma ~ U[1, 2]^m, alpha = 0.05, box support mu +- 2 sigma.
DroInstance gen_cvar(int m, std::uint64_t seed);

// Box {lo <= xi <= hi} as A = [I; -I], b = [hi; -lo].
SupportPolyhedron box_support(const Vector& lo, const Vector& hi);

// Three-asset CVaR case where keeping the largest-variance component is worse
// than keeping the smallest one (mean fixed, covariance bounded by Sigma).
DroInstance cvar_pca_counterexample();

// Four-dimensional case whose optimal low-rank map is not the rank-based one.
// Its decision set is discrete (x2 in {-7, 1}); one instance per choice with
// x pinned by equalities, the optimum is the minimum over the list.
std::vector<DroInstance> low_rank_counterexample();
// The 4 x 3 map built from the rank-two optimal Q of that case (4 decimals).
Matrix low_rank_counterexample_map();

}  // namespace odr
