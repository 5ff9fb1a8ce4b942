#include "odr_dro/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "odr_dro/conic_builder.hpp"
#include "odr_dro/errors.hpp"

namespace odr {

bool DecisionSet::diagonal() const {
  for (const auto& d : lmi) {
    Matrix off = d;
    off.diagonal().setZero();
    if (off.cwiseAbs().maxCoeff() != 0.0) return false;
  }
  return true;
}

int DroInstance::n() const {
  if (!objective.pieces.empty()) return static_cast<int>(objective.pieces[0].w.cols());
  if (!decisions.lmi.empty()) return static_cast<int>(decisions.lmi.size()) - 1;
  return static_cast<int>(decisions.eq_a.cols());
}

namespace {

// Largest r with sum lmi_i x_i + lmi_0 - r I >= 0 and eq_a x = eq_b, capped at 1.
// Returns -inf when the equalities alone are inconsistent.
double slater_margin(const DecisionSet& ds, int n) {
  ProblemBuilder pb;
  const VarSlice x = pb.add_variables("x", n);
  const VarSlice r = pb.add_variables("r", 1);
  const int tau = ds.tau();
  if (tau > 0) {
    ExprMatrix lmi(tau, ExprVector(tau));
    for (int i = 0; i < tau; ++i) {
      for (int j = 0; j < tau; ++j) {
        LinExpr e(ds.lmi[0](i, j));
        for (int v = 0; v < n; ++v) {
          if (ds.lmi[v + 1](i, j) != 0.0) e += ds.lmi[v + 1](i, j) * pb.var(x, v);
        }
        if (i == j) e -= pb.var(r, 0);
        lmi[i][j] = e;
      }
    }
    if (ds.diagonal()) {
      for (int i = 0; i < tau; ++i) pb.add_nonneg(lmi[i][i]);
    } else {
      pb.add_psd(lmi);
    }
  }
  pb.add_nonneg(LinExpr(1.0) - pb.var(r, 0));
  for (int row = 0; row < ds.eq_a.rows(); ++row) {
    LinExpr e(-ds.eq_b(row));
    for (int v = 0; v < n; ++v) {
      if (ds.eq_a(row, v) != 0.0) e += ds.eq_a(row, v) * pb.var(x, v);
    }
    pb.add_equality(e);
  }
  pb.set_objective(-pb.var(r, 0));
  const ConicProblem p = pb.build();
  const ConicSolution sol = solve(p);
  if (sol.status == SolveStatus::kPrimalInfeasible) return -std::numeric_limits<double>::infinity();
  if (!sol.optimal()) return std::numeric_limits<double>::quiet_NaN();
  return sol.var(p, "r")(0);
}

}  // namespace

Diagnostics validate(const DroInstance& in) {
  Diagnostics diag;
  auto fail = [&diag](const std::string& msg) { diag.violations.push_back(msg); };
  const int m = in.m();
  const auto& amb = in.ambiguity;
  if (m < 1) fail("ambiguity: mu is empty");
  if (!amb.mu.allFinite()) fail("ambiguity: mu has non-finite entries");
  if (amb.sigma.rows() != m || amb.sigma.cols() != m) {
    fail("ambiguity: sigma must be m x m");
  } else if (!amb.sigma.allFinite()) {
    fail("ambiguity: sigma has non-finite entries");
  } else if (amb.sigma != amb.sigma.transpose()) {
    fail("ambiguity: sigma is not symmetric");
  } else if (m >= 1) {
    const double floor = 1e-10 * amb.sigma.trace() / m;
    if (!(min_eigenvalue(amb.sigma) > floor)) fail("ambiguity: sigma is not positive definite");
  }
  if (!(amb.gamma1 >= 0.0)) fail("ambiguity: gamma1 must be >= 0");
  if (!(amb.gamma2 >= 1.0)) fail("ambiguity: gamma2 must be >= 1");

  const auto& sup = in.support;
  if (sup.a.rows() != sup.b.size()) fail("support: row count of a differs from length of b");
  if (sup.rows() > 0 && sup.a.cols() != m) fail("support: a must have m columns");
  if (!sup.a.allFinite() || !sup.b.allFinite()) fail("support: non-finite entries");

  const int n = in.n();
  if (in.k() < 1) fail("objective: at least one piece required");
  for (int k = 0; k < in.k(); ++k) {
    const auto& pc = in.objective.pieces[k];
    const std::string tag = "objective: piece " + std::to_string(k);
    if (pc.w.rows() != m || pc.w.cols() != n) fail(tag + " slope matrix must be m x n");
    if (pc.d.size() != m) fail(tag + " slope offset must have length m");
    if (pc.w0.size() != n) fail(tag + " intercept row must have length n");
    if (!pc.w.allFinite() || !pc.d.allFinite() || !pc.w0.allFinite() || !std::isfinite(pc.d0)) {
      fail(tag + " has non-finite entries");
    }
  }

  const auto& ds = in.decisions;
  bool shapes_ok = true;
  if (!ds.lmi.empty()) {
    if (static_cast<int>(ds.lmi.size()) != n + 1) {
      fail("decisions: lmi needs n + 1 matrices");
      shapes_ok = false;
    }
    const int tau = ds.tau();
    if (tau < 1) {
      fail("decisions: lmi matrices must be at least 1 x 1");
      shapes_ok = false;
    }
    for (const auto& d : ds.lmi) {
      if (d.rows() != tau || d.cols() != tau) {
        fail("decisions: lmi matrices differ in size");
        shapes_ok = false;
        break;
      }
      if (d != d.transpose()) {
        fail("decisions: lmi matrix not symmetric");
        shapes_ok = false;
        break;
      }
    }
  }
  if (ds.eq_a.rows() != ds.eq_b.size() || (ds.eq_a.rows() > 0 && ds.eq_a.cols() != n)) {
    fail("decisions: equality block has inconsistent shape");
    shapes_ok = false;
  }
  if (shapes_ok && diag.ok() && (!ds.lmi.empty() || ds.eq_a.rows() > 0)) {
    const double margin = slater_margin(ds, n);
    if (std::isnan(margin)) {
      fail("decisions: Slater check did not converge");
    } else if (!(margin > 1e-6)) {
      fail("decisions: no strictly feasible point");
    }
  }
  return diag;
}

void require_valid(const DroInstance& instance) {
  const Diagnostics d = validate(instance);
  if (d.ok()) return;
  std::string msg = "invalid instance";
  for (const auto& v : d.violations) msg += "; " + v;
  throw InputError(msg);
}

Transform make_transform(const MomentAmbiguity& ambiguity) {
  const Matrix& sigma = ambiguity.sigma;
  Transform t;
  t.factors = sym_eig(sigma);
  const int m = static_cast<int>(sigma.rows());
  if (m == 0 || !(t.factors.lambda(m - 1) > 1e-10 * sigma.trace() / m)) {
    throw InputError("make_transform: sigma is not positive definite");
  }
  t.half = t.factors.u * t.factors.sqrt_lambda.asDiagonal();
  return t;
}

Vector piece_slope(const AffinePiece& piece, const Vector& x) { return piece.w * x + piece.d; }

double piece_intercept(const AffinePiece& piece, const Vector& x) {
  return piece.w0.dot(x) + piece.d0;
}

double evaluate_f(const DroInstance& instance, const Vector& x, const Vector& xi) {
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& pc : instance.objective.pieces) {
    best = std::max(best, piece_intercept(pc, x) + piece_slope(pc, x).dot(xi));
  }
  return best;
}

}  // namespace odr
