#include "odr_dro/conic_builder.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "odr_dro/errors.hpp"

namespace odr {

LinExpr LinExpr::term(int index, double coef) {
  LinExpr e;
  e.terms.emplace_back(index, coef);
  return e;
}

LinExpr& LinExpr::operator+=(const LinExpr& o) {
  terms.insert(terms.end(), o.terms.begin(), o.terms.end());
  constant += o.constant;
  return *this;
}

LinExpr& LinExpr::operator-=(const LinExpr& o) {
  for (const auto& [i, v] : o.terms) terms.emplace_back(i, -v);
  constant -= o.constant;
  return *this;
}

LinExpr& LinExpr::operator*=(double a) {
  for (auto& t : terms) t.second *= a;
  constant *= a;
  return *this;
}

double LinExpr::evaluate(const Vector& x) const {
  double v = constant;
  for (const auto& [i, c] : terms) v += c * x(i);
  return v;
}

LinExpr operator+(LinExpr a, const LinExpr& b) { return a += b; }
LinExpr operator-(LinExpr a, const LinExpr& b) { return a -= b; }
LinExpr operator*(double a, LinExpr e) { return e *= a; }
LinExpr operator-(LinExpr e) { return e *= -1.0; }

ExprVector evaluate_into(const Matrix& coef, const ExprVector& v) {
  if (coef.cols() != static_cast<Eigen::Index>(v.size())) {
    throw DimensionError("expression product: size mismatch");
  }
  ExprVector out(coef.rows());
  for (Eigen::Index i = 0; i < coef.rows(); ++i) {
    for (Eigen::Index j = 0; j < coef.cols(); ++j) {
      if (coef(i, j) != 0.0) out[i] += coef(i, j) * v[j];
    }
  }
  return out;
}

Vector evaluate(const ExprVector& v, const Vector& x) {
  Vector out(v.size());
  for (size_t i = 0; i < v.size(); ++i) out(i) = v[i].evaluate(x);
  return out;
}

VarSlice ProblemBuilder::add_variables(const std::string& name, int count) {
  if (slices_.count(name)) throw InputError("duplicate variable slice: " + name);
  VarSlice s{num_vars_, count};
  num_vars_ += count;
  slices_[name] = s;
  return s;
}

ExprVector ProblemBuilder::vars(const VarSlice& slice) const {
  ExprVector out;
  for (int i = 0; i < slice.size; ++i) out.push_back(var(slice, i));
  return out;
}

ExprMatrix ProblemBuilder::sym_matrix(const VarSlice& slice, int n) const {
  if (slice.size != svec_length(n)) throw DimensionError("sym_matrix: slice is not an svec");
  ExprMatrix m(n, ExprVector(n));
  int k = slice.offset;
  for (int j = 0; j < n; ++j) {
    for (int i = j; i < n; ++i) {
      const double coef = i == j ? 1.0 : 1.0 / std::numbers::sqrt2;
      m[i][j] = LinExpr::term(k, coef);
      m[j][i] = m[i][j];
      ++k;
    }
  }
  return m;
}

void ProblemBuilder::add_nonneg(const LinExpr& e) { nonneg_.push_back(e); }

void ProblemBuilder::add_soc(const ExprVector& tv) {
  if (tv.empty()) throw DimensionError("add_soc: empty cone");
  cones_.push_back({ConeKind::kSecondOrder, static_cast<int>(tv.size()), tv});
}

void ProblemBuilder::add_psd(const ExprMatrix& m) {
  const int n = static_cast<int>(m.size());
  if (n == 0) throw DimensionError("add_psd: empty matrix");
  if (n == 1) {
    add_nonneg(m[0][0]);
    return;
  }
  ExprVector rows;
  for (int j = 0; j < n; ++j) {
    for (int i = j; i < n; ++i) {
      rows.push_back(i == j ? m[i][j] : std::numbers::sqrt2 * m[i][j]);
    }
  }
  cones_.push_back({ConeKind::kPsd, n, std::move(rows)});
}

void ProblemBuilder::add_equality(const LinExpr& e) { equalities_.push_back(e); }

void ProblemBuilder::add_squared_norm_epigraph(const ExprVector& w, const LinExpr& t) {
  // ||w||^2 <= 2t  <=>  ||(w, (t - 1)/sqrt2)|| <= (t + 1)/sqrt2.
  ExprVector tv;
  tv.push_back((1.0 / std::numbers::sqrt2) * (t + LinExpr(1.0)));
  for (const auto& e : w) tv.push_back(e);
  tv.push_back((1.0 / std::numbers::sqrt2) * (t - LinExpr(1.0)));
  add_soc(tv);
}

ConicProblem ProblemBuilder::build() const {
  ConicProblem p;
  p.var_map = slices_;
  p.c = Vector::Zero(num_vars_);
  for (const auto& [i, v] : objective_.terms) p.c(i) += v;
  p.objective_offset = objective_.constant;

  std::vector<Triplet> trips;
  p.b_eq.resize(equalities_.size());
  for (size_t r = 0; r < equalities_.size(); ++r) {
    for (const auto& [i, v] : equalities_[r].terms) trips.emplace_back(r, i, v);
    p.b_eq(r) = -equalities_[r].constant;
  }
  p.a_eq.resize(static_cast<int>(equalities_.size()), num_vars_);
  p.a_eq.setFromTriplets(trips.begin(), trips.end());

  // Value of each cone row is h - g x = constant + sum coef x.
  std::vector<const LinExpr*> rows;
  if (!nonneg_.empty()) {
    p.cone.blocks.push_back({ConeKind::kNonneg, static_cast<int>(nonneg_.size())});
    for (const auto& e : nonneg_) rows.push_back(&e);
  }
  for (const auto& c : cones_) {
    p.cone.blocks.push_back({c.kind, c.n});
    for (const auto& e : c.rows) rows.push_back(&e);
  }
  trips.clear();
  p.h.resize(rows.size());
  for (size_t r = 0; r < rows.size(); ++r) {
    for (const auto& [i, v] : rows[r]->terms) trips.emplace_back(r, i, -v);
    p.h(r) = rows[r]->constant;
  }
  p.g.resize(static_cast<int>(rows.size()), num_vars_);
  p.g.setFromTriplets(trips.begin(), trips.end());  // duplicates are summed
  p.g.prune(0.0);
  p.a_eq.prune(0.0);
  return p;
}

}  // namespace odr
