#include "odr_dro/applications.hpp"

#include <string>

#include "odr_dro/errors.hpp"
#include "odr_dro/rng.hpp"

namespace odr {
namespace {

void check_length(const Vector& v, int m, const char* name) {
  if (v.size() != m) throw DimensionError(std::string(name) + " must have length m");
}

Vector uniform_vector(std::uint64_t seed, const char* stream, int m, double lo, double hi) {
  Rng rng(seed, stream);
  Vector v(m);
  for (int i = 0; i < m; ++i) v(i) = rng.uniform(lo, hi);
  return v;
}

MomentAmbiguity generated_ambiguity(int m, std::uint64_t seed, double mu_lo, double mu_hi) {
  MomentAmbiguity amb;
  amb.mu = uniform_vector(seed, "mu", m, mu_lo, mu_hi);
  const Vector sigma = uniform_vector(seed, "sigma", m, 1.0, 2.0);
  amb.sigma = symmetrize(sigma.asDiagonal() * random_correlation(m, seed) * sigma.asDiagonal());
  return amb;
}

// Diagonal LMI with diag(x_1..x_count) >= 0 over n decision entries.
std::vector<Matrix> orthant_lmi(int count, int n) {
  std::vector<Matrix> lmi(n + 1, Matrix::Zero(count, count));
  for (int i = 0; i < count; ++i) lmi[i + 1](i, i) = 1.0;
  return lmi;
}

}  // namespace

NewsvendorParams NewsvendorParams::schedule(int m) {
  if (m < 1) throw DimensionError("newsvendor needs at least one product");
  NewsvendorParams p;
  p.m = m;
  p.c.resize(m);
  p.v.resize(m);
  p.g.resize(m);
  for (int i = 0; i < m; ++i) {
    const double base = 5.0 + i;
    p.c(i) = 0.1 * base;
    p.v(i) = 0.15 * base;
    p.g(i) = 0.05 * base;
  }
  return p;
}

DroInstance build_newsvendor(const NewsvendorParams& params, const MomentAmbiguity& ambiguity) {
  const int m = params.m;
  if (m < 1) throw DimensionError("newsvendor needs at least one product");
  check_length(params.c, m, "c");
  check_length(params.v, m, "v");
  check_length(params.g, m, "g");
  check_length(ambiguity.mu, m, "mu");
  for (int i = 0; i < m; ++i) {
    if (!(params.v(i) > params.c(i) && params.c(i) > params.g(i) && params.g(i) > 0.0)) {
      throw InputError("newsvendor prices must satisfy v > c > g > 0");
    }
  }
  DroInstance in;
  in.ambiguity = ambiguity;
  in.support.a = Matrix::Zero(0, m);
  in.support.b = Vector::Zero(0);
  if (params.nonnegative_demand) {
    in.support.a = -Matrix::Identity(m, m);
    in.support.b = Vector::Zero(m);
  }
  AffinePiece shortage{Matrix::Zero(m, m), Vector::Zero(m), params.c - params.v, 0.0};
  AffinePiece overstock{Matrix::Zero(m, m), params.g - params.v, params.c - params.g, 0.0};
  in.objective.pieces = {shortage, overstock};
  in.decisions.lmi = orthant_lmi(m, m);
  in.decisions.eq_a = Matrix::Zero(0, m);
  in.decisions.eq_b = Vector::Zero(0);
  in.label = "newsvendor m=" + std::to_string(m);
  return in;
}

DroInstance build_cvar(const CvarParams& params, const MomentAmbiguity& ambiguity) {
  const int m = params.m;
  if (m < 1) throw DimensionError("cvar needs at least one asset");
  if (!(params.alpha > 0.0 && params.alpha < 1.0)) throw InputError("alpha must lie in (0, 1)");
  check_length(ambiguity.mu, m, "mu");
  const int n = m + 1;
  DroInstance in;
  in.ambiguity = ambiguity;
  in.support.a = Matrix::Zero(0, m);
  in.support.b = Vector::Zero(0);

  AffinePiece threshold{Matrix::Zero(m, n), Vector::Zero(m), Vector::Zero(n), 0.0};
  threshold.w0(m) = 1.0;
  AffinePiece tail{Matrix::Zero(m, n), Vector::Zero(m), Vector::Zero(n), 0.0};
  tail.w.leftCols(m) = Matrix::Identity(m, m) / params.alpha;
  tail.w0(m) = 1.0 - 1.0 / params.alpha;
  in.objective.pieces = {threshold, tail};

  in.decisions.lmi = orthant_lmi(m, n);
  in.decisions.eq_a = Matrix::Zero(1, n);
  in.decisions.eq_a.leftCols(m).setOnes();
  in.decisions.eq_b = Vector::Ones(1);
  in.label = "cvar m=" + std::to_string(m);
  return in;
}

SupportPolyhedron box_support(const Vector& lo, const Vector& hi) {
  const int m = static_cast<int>(lo.size());
  check_length(hi, m, "hi");
  SupportPolyhedron s;
  s.a.resize(2 * m, m);
  s.a << Matrix::Identity(m, m), -Matrix::Identity(m, m);
  s.b.resize(2 * m);
  s.b << hi, -lo;
  return s;
}

DroInstance gen_newsvendor(int m, std::uint64_t seed) {
  DroInstance in = build_newsvendor(NewsvendorParams::schedule(m), generated_ambiguity(m, seed, 0.0, 10.0));
  in.label = "newsvendor m=" + std::to_string(m) + " seed=" + std::to_string(seed);
  return in;
}

DroInstance gen_cvar(int m, std::uint64_t seed) {
  CvarParams params;
  params.m = m;
  MomentAmbiguity amb = generated_ambiguity(m, seed, -5.0, 5.0);
  const Vector spread = params.half_width * amb.sigma.diagonal().cwiseSqrt();
  DroInstance in = build_cvar(params, amb);
  in.support = box_support(amb.mu - spread, amb.mu + spread);
  in.label = "cvar m=" + std::to_string(m) + " seed=" + std::to_string(seed);
  return in;
}

DroInstance cvar_pca_counterexample() {
  CvarParams params;
  params.m = 3;
  params.alpha = 0.05;
  MomentAmbiguity amb;
  amb.mu = (Vector(3) << 1.0, 2.0, 3.0).finished();
  amb.sigma = Vector((Vector(3) << 1.0, 3.0, 2.0).finished()).asDiagonal();
  amb.gamma1 = 0.0;
  amb.gamma2 = 1.0;
  DroInstance in = build_cvar(params, amb);
  in.support = box_support((Vector(3) << 0.0, 1.0, 2.0).finished(), (Vector(3) << 2.0, 3.0, 4.0).finished());
  in.label = "cvar pca counterexample";
  return in;
}

std::vector<DroInstance> low_rank_counterexample() {
  const int m = 4;
  MomentAmbiguity amb;
  amb.mu = Vector::Ones(m);
  amb.sigma = Matrix::Identity(m, m);
  amb.gamma1 = 1.0;
  amb.gamma2 = 2.0;
  std::vector<Matrix> slopes(3, Matrix::Zero(m, m));
  slopes[0](0, 0) = 1.0;
  slopes[0](3, 3) = 1.0;
  slopes[1](1, 1) = 1.0;
  slopes[1](3, 3) = 2.0;
  slopes[2](2, 2) = 1.0;
  slopes[2](3, 3) = 1.0;

  std::vector<DroInstance> out;
  for (double x2 : {-7.0, 1.0}) {
    DroInstance in;
    in.ambiguity = amb;
    in.support.a = Matrix::Zero(0, m);
    in.support.b = Vector::Zero(0);
    for (const Matrix& w : slopes) in.objective.pieces.push_back({w, Vector::Zero(m), Vector::Zero(m), 0.0});
    in.decisions.eq_a = Matrix::Identity(m, m);
    in.decisions.eq_b = (Vector(m) << 1.0, x2, 1.0, 1.0).finished();
    in.label = "low-rank counterexample x2=" + std::to_string(static_cast<int>(x2));
    out.push_back(std::move(in));
  }
  return out;
}

Matrix low_rank_counterexample_map() {
  Matrix v(4, 3);
  v << 0.7071, -0.5774, -0.1543,
       0.0, 0.5774, -0.3086,
       0.0, 0.0, 0.9258,
       0.7071, 0.5774, 0.1543;
  return v;
}

}  // namespace odr
