#pragma once

#include <string>
#include <vector>

#include "odr_dro/linalg.hpp"

namespace odr {

// Mean within an ellipsoid of radius gamma1 around mu, second moment
// about mu bounded by gamma2 * sigma.
struct MomentAmbiguity {
  Vector mu;
  Matrix sigma;
  double gamma1 = 1.0;
  double gamma2 = 2.0;
};

// S = {xi : a xi <= b}; zero rows means the whole space.
struct SupportPolyhedron {
  Matrix a;
  Vector b;
  int rows() const { return static_cast<int>(b.size()); }
};

// Piece value: w0'x + d0 + (w x + d)' xi.
struct AffinePiece {
  Matrix w;   // m x n
  Vector d;   // m
  Vector w0;  // n
  double d0 = 0.0;
};

struct PiecewiseLinearObjective {
  std::vector<AffinePiece> pieces;
};

// X = {x : sum_i lmi[i] x_i + lmi[0] >= 0, eq_a x = eq_b}. An empty lmi list
// means no matrix inequality.
struct DecisionSet {
  std::vector<Matrix> lmi;
  Matrix eq_a;
  Vector eq_b;

  int tau() const { return lmi.empty() ? 0 : static_cast<int>(lmi[0].rows()); }
  bool diagonal() const;
};

struct DroInstance {
  MomentAmbiguity ambiguity;
  SupportPolyhedron support;
  PiecewiseLinearObjective objective;
  DecisionSet decisions;
  std::string label;

  int m() const { return static_cast<int>(ambiguity.mu.size()); }
  int n() const;
  int k() const { return static_cast<int>(objective.pieces.size()); }
};

struct Transform {
  SpectralFactors factors;
  Matrix half;  // U diag(sqrt(lambda))
};

struct Diagnostics {
  std::vector<std::string> violations;
  bool ok() const { return violations.empty(); }
};

Diagnostics validate(const DroInstance& instance);
// Throws InputError with the joined diagnostics when validation fails.
void require_valid(const DroInstance& instance);

Transform make_transform(const MomentAmbiguity& ambiguity);

// y_k(x) = W_k x + d_k and y0_k(x) = w0_k' x + d0_k.
Vector piece_slope(const AffinePiece& piece, const Vector& x);
double piece_intercept(const AffinePiece& piece, const Vector& x);

double evaluate_f(const DroInstance& instance, const Vector& x, const Vector& xi);

}  // namespace odr
