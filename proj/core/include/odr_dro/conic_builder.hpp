#pragma once

#include <string>
#include <utility>
#include <vector>

#include "odr_dro/conic.hpp"

namespace odr {

// Affine expression constant + sum coef * x[index].
struct LinExpr {
  std::vector<std::pair<int, double>> terms;
  double constant = 0.0;

  LinExpr() = default;
  LinExpr(double c) : constant(c) {}  // NOLINT(google-explicit-constructor)
  static LinExpr term(int index, double coef = 1.0);

  LinExpr& operator+=(const LinExpr& o);
  LinExpr& operator-=(const LinExpr& o);
  LinExpr& operator*=(double a);
  double evaluate(const Vector& x) const;
};

LinExpr operator+(LinExpr a, const LinExpr& b);
LinExpr operator-(LinExpr a, const LinExpr& b);
LinExpr operator*(double a, LinExpr e);
LinExpr operator-(LinExpr e);

using ExprVector = std::vector<LinExpr>;
// Symmetric matrix of expressions; only entries with row >= col are read.
using ExprMatrix = std::vector<std::vector<LinExpr>>;

ExprVector evaluate_into(const Matrix& coef, const ExprVector& v);  // coef * v
Vector evaluate(const ExprVector& v, const Vector& x);

class ProblemBuilder {
 public:
  VarSlice add_variables(const std::string& name, int count);
  LinExpr var(const VarSlice& slice, int i) const { return LinExpr::term(slice.offset + i); }
  ExprVector vars(const VarSlice& slice) const;
  // Symmetric matrix view over a slice holding svec coordinates.
  ExprMatrix sym_matrix(const VarSlice& slice, int n) const;

  void add_nonneg(const LinExpr& e);
  void add_soc(const ExprVector& tv);
  void add_psd(const ExprMatrix& m);
  void add_equality(const LinExpr& e);  // e == 0
  // ||w||^2 <= 2 t as a standard second-order cone.
  void add_squared_norm_epigraph(const ExprVector& w, const LinExpr& t);
  void set_objective(const LinExpr& e) { objective_ = e; }

  int num_vars() const { return num_vars_; }
  ConicProblem build() const;

 private:
  struct ConeRows {
    ConeKind kind;
    int n;
    ExprVector rows;
  };
  int num_vars_ = 0;
  std::map<std::string, VarSlice> slices_;
  ExprVector nonneg_;
  std::vector<ConeRows> cones_;
  ExprVector equalities_;
  LinExpr objective_;
};

}  // namespace odr
