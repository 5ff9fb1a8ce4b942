#include "odr_dro/reformulations.hpp"

#include <cmath>
#include <string>

#include "odr_dro/conic_builder.hpp"
#include "odr_dro/errors.hpp"

namespace odr {
namespace {


// Shared scaffolding: the (x, s, lambda) core, the decision set, block
// scalars S_k and the projected residual directions.
class Assembler {
 public:
  explicit Assembler(const DroInstance& instance)
      : in_(instance), n_(instance.n()), k_(instance.k()),
        l_(instance.support.rows()) {}

  ProblemBuilder pb;
  VarSlice x, s, lambda;

  void add_primal_core() {
    x = pb.add_variables("x", n_);
    s = pb.add_variables("s", 1);
    lambda = pb.add_variables("lambda", k_ * l_);
    for (int i = 0; i < k_ * l_; ++i) pb.add_nonneg(pb.var(lambda, i));
    add_decision_set();
  }

  LinExpr lam(int k, int j) const { return pb.var(lambda, k * l_ + j); }

  // S_k = s - y0_k(x) - lambda_k'(b - A mu) - y_k(x)' mu
  LinExpr block_scalar(int k) const {
    const AffinePiece& piece = in_.objective.pieces[k];
    const Vector& mu = in_.ambiguity.mu;
    LinExpr e = pb.var(s, 0);
    e.constant -= piece.d0 + piece.d.dot(mu);
    const Vector wx = piece.w0 + piece.w.transpose() * mu;
    for (int i = 0; i < n_; ++i) {
      if (wx(i) != 0.0) e.terms.emplace_back(x.offset + i, -wx(i));
    }
    if (l_ > 0) {
      const Vector slack = in_.support.b - in_.support.a * mu;
      for (int j = 0; j < l_; ++j) {
        if (slack(j) != 0.0) e.terms.emplace_back(lambda.offset + k * l_ + j, -slack(j));
      }
    }
    return e;
  }

  // factor'(A' lambda_k - W_k x - d_k)
  ExprVector direction(int k, const Matrix& factor) const {
    const AffinePiece& piece = in_.objective.pieces[k];
    const int c = static_cast<int>(factor.cols());
    const Matrix fw = factor.transpose() * piece.w;
    const Vector fd = factor.transpose() * piece.d;
    Matrix fa;
    if (l_ > 0) fa = factor.transpose() * in_.support.a.transpose();
    ExprVector out(c);
    for (int r = 0; r < c; ++r) {
      LinExpr& e = out[r];
      e.constant = -fd(r);
      for (int j = 0; j < l_; ++j) {
        if (fa(r, j) != 0.0) e.terms.emplace_back(lambda.offset + k * l_ + j, fa(r, j));
      }
      for (int i = 0; i < n_; ++i) {
        if (fw(r, i) != 0.0) e.terms.emplace_back(x.offset + i, -fw(r, i));
      }
    }
    return out;
  }

  // [[S_k, off'/2], [off/2, Q]] >= 0; a scalar inequality when Q is empty.
  void add_moment_lmi(const LinExpr& sk, const ExprVector& off, const ExprMatrix& q) {
    const int c = static_cast<int>(q.size());
    if (c == 0) {
      pb.add_nonneg(sk);
      return;
    }
    ExprMatrix m(c + 1, ExprVector(c + 1));
    m[0][0] = sk;
    for (int i = 0; i < c; ++i) {
      m[i + 1][0] = 0.5 * off[i];
      m[0][i + 1] = m[i + 1][0];
      for (int j = 0; j < c; ++j) m[i + 1][j + 1] = q[i][j];
    }
    pb.add_psd(m);
  }

  // sqrt(gamma1) ||v||; dropped when gamma1 = 0 (v stays a free variable).
  LinExpr norm_term(const ExprVector& v) {
    const double g1 = in_.ambiguity.gamma1;
    if (g1 == 0.0 || v.empty()) return LinExpr(0.0);
    const VarSlice r = pb.add_variables("norm_epigraph", 1);
    ExprVector tv{pb.var(r, 0)};
    tv.insert(tv.end(), v.begin(), v.end());
    pb.add_soc(tv);
    return std::sqrt(g1) * pb.var(r, 0);
  }

  LinExpr trace(const ExprMatrix& q) const {
    LinExpr e;
    for (std::size_t i = 0; i < q.size(); ++i) e += q[i][i];
    return e;
  }

 private:
  void add_decision_set() {
    const DecisionSet& ds = in_.decisions;
    if (!ds.lmi.empty()) {
      const int tau = ds.tau();
      auto entry = [&](int r, int c) {
        LinExpr e(ds.lmi[0](r, c));
        for (int i = 0; i < n_; ++i) {
          const double v = ds.lmi[i + 1](r, c);
          if (v != 0.0) e.terms.emplace_back(x.offset + i, v);
        }
        return e;
      };
      if (ds.diagonal()) {
        for (int r = 0; r < tau; ++r) pb.add_nonneg(entry(r, r));
      } else {
        ExprMatrix m(tau, ExprVector(tau));
        for (int r = 0; r < tau; ++r) {
          for (int c = 0; c <= r; ++c) {
            m[r][c] = entry(r, c);
            m[c][r] = m[r][c];
          }
        }
        pb.add_psd(m);
      }
    }
    for (int r = 0; r < ds.eq_a.rows(); ++r) {
      LinExpr e(-ds.eq_b(r));
      for (int i = 0; i < n_; ++i) {
        if (ds.eq_a(r, i) != 0.0) e.terms.emplace_back(x.offset + i, ds.eq_a(r, i));
      }
      pb.add_equality(e);
    }
  }

  const DroInstance& in_;
  int n_, k_, l_;
};

void check_orthonormal_shape(const DroInstance& instance, const Matrix& b) {
  if (b.rows() != instance.m()) {
    throw DimensionError("reduction map must have " + std::to_string(instance.m()) + " rows");
  }
  if (b.cols() > instance.m()) throw DimensionError("reduction map has more columns than rows");
}

ConicProblem build_ub_impl(const DroInstance& instance, const Transform& transform,
                           const Matrix& b, int m1, const SplitPenalty* penalty,
                           const char* q_name) {
  check_orthonormal_shape(instance, b);
  const int c = static_cast<int>(b.cols());
  if (m1 < 0 || m1 > c) throw DimensionError("moment block size out of range");
  const int m = instance.m(), k = instance.k();
  Assembler as(instance);
  as.add_primal_core();
  const VarSlice q = as.pb.add_variables("q", m);
  const VarSlice qr = as.pb.add_variables(q_name, svec_length(m1));
  const VarSlice u = as.pb.add_variables("u", k * m1);
  const VarSlice u2 = as.pb.add_variables("u2", k * (c - m1));
  const ExprMatrix qmat = as.pb.sym_matrix(qr, m1);
  LinExpr objective = as.pb.var(as.s, 0) + instance.ambiguity.gamma2 * as.trace(qmat);
  if (penalty != nullptr) {
    if (penalty->beta.rows() != k || penalty->beta.cols() != m) {
      throw DimensionError("split multipliers must be K x m");
    }
  }
  for (int kk = 0; kk < k; ++kk) {
    ExprVector uk(c);
    for (int i = 0; i < m1; ++i) uk[i] = as.pb.var(u, kk * m1 + i);
    for (int i = m1; i < c; ++i) uk[i] = as.pb.var(u2, kk * (c - m1) + i - m1);
    as.add_moment_lmi(as.block_scalar(kk), ExprVector(uk.begin(), uk.begin() + m1), qmat);
    // q + g_k - B u_k
    ExprVector mismatch = as.direction(kk, transform.half);
    const ExprVector bu = evaluate_into(b, uk);
    for (int i = 0; i < m; ++i) mismatch[i] += as.pb.var(q, i) - bu[i];
    if (penalty == nullptr) {
      for (const LinExpr& e : mismatch) as.pb.add_equality(e);
    } else {
      const VarSlice t = as.pb.add_variables("penalty_" + std::to_string(kk), 1);
      as.pb.add_squared_norm_epigraph(mismatch, as.pb.var(t, 0));
      for (int i = 0; i < m; ++i) objective += penalty->beta(kk, i) * mismatch[i];
      objective += penalty->rho * as.pb.var(t, 0);
    }
  }
  objective += as.norm_term(as.pb.vars(q));
  as.pb.set_objective(objective);
  return as.pb.build();
}

ConicProblem build_lb_dual_impl(const DroInstance& instance, const Transform& transform,
                                const Matrix& b, const SplitPenalty* penalty) {
  check_orthonormal_shape(instance, b);
  const int m = instance.m(), k = instance.k(), n = instance.n();
  const int l = instance.support.rows();
  const int m1 = static_cast<int>(b.cols());
  if (m1 < 1) throw DimensionError("reduction map needs at least one column");
  const DecisionSet& ds = instance.decisions;
  const int tau = ds.tau();
  const int neq = static_cast<int>(ds.eq_a.rows());
  const MomentAmbiguity& amb = instance.ambiguity;

  ProblemBuilder pb;
  const VarSlice t = pb.add_variables("t", k);
  const VarSlice p = pb.add_variables("p", k * m1);
  const VarSlice big_p = pb.add_variables("P", k * svec_length(m1));
  const bool diag = ds.diagonal();
  const VarSlice z = pb.add_variables(diag ? "z" : "Z", diag ? tau : svec_length(tau));
  const VarSlice eta = pb.add_variables("eta", neq);
  VarSlice omega_vars{};
  if (penalty != nullptr) omega_vars = pb.add_variables("omega", k * m);

  auto p_vec = [&](int kk) {
    ExprVector v(m1);
    for (int i = 0; i < m1; ++i) v[i] = pb.var(p, kk * m1 + i);
    return v;
  };
  auto omega = [&](int kk) {
    if (penalty == nullptr) return evaluate_into(b, p_vec(kk));
    ExprVector v(m);
    for (int i = 0; i < m; ++i) v[i] = pb.var(omega_vars, kk * m + i);
    return v;
  };

  LinExpr sum_t;
  for (int kk = 0; kk < k; ++kk) sum_t += pb.var(t, kk);
  pb.add_equality(sum_t - LinExpr(1.0));

  ExprMatrix sum_big_p(m1, ExprVector(m1));
  ExprVector sum_p(m1);
  for (int kk = 0; kk < k; ++kk) {
    const VarSlice pk{big_p.offset + kk * svec_length(m1), svec_length(m1)};
    const ExprMatrix pm = pb.sym_matrix(pk, m1);
    const ExprVector pv = p_vec(kk);
    ExprMatrix block(m1 + 1, ExprVector(m1 + 1));
    block[0][0] = pb.var(t, kk);
    for (int i = 0; i < m1; ++i) {
      block[i + 1][0] = pv[i];
      block[0][i + 1] = pv[i];
      sum_p[i] += pv[i];
      for (int j = 0; j < m1; ++j) {
        block[i + 1][j + 1] = pm[i][j];
        sum_big_p[i][j] += pm[i][j];
      }
    }
    pb.add_psd(block);
  }

  if (amb.gamma1 > 0.0) {
    ExprVector tv{LinExpr(std::sqrt(amb.gamma1))};
    tv.insert(tv.end(), sum_p.begin(), sum_p.end());
    pb.add_soc(tv);
  } else {
    for (const LinExpr& e : sum_p) pb.add_equality(e);
  }

  ExprMatrix moment(m1, ExprVector(m1));
  for (int i = 0; i < m1; ++i) {
    for (int j = 0; j < m1; ++j) moment[i][j] = (i == j ? LinExpr(amb.gamma2) : LinExpr(0.0)) - sum_big_p[i][j];
  }
  pb.add_psd(moment);

  Matrix a_half;
  Vector support_gap;
  if (l > 0) {
    a_half = instance.support.a * transform.half;
    support_gap = instance.support.a * amb.mu - instance.support.b;
  }

  ExprVector stationarity(n);
  LinExpr objective;  // the maximization objective; negated at the end
  for (int kk = 0; kk < k; ++kk) {
    const AffinePiece& piece = instance.objective.pieces[kk];
    const ExprVector om = omega(kk);
    const LinExpr tk = pb.var(t, kk);
    const ExprVector a_om = l > 0 ? evaluate_into(a_half, om) : ExprVector{};
    for (int j = 0; j < l; ++j) pb.add_nonneg(-(support_gap(j) * tk + a_om[j]));
    const Vector wmu = piece.w0 + piece.w.transpose() * amb.mu;
    const ExprVector w_om = evaluate_into(piece.w.transpose() * transform.half, om);
    for (int i = 0; i < n; ++i) stationarity[i] += wmu(i) * tk + w_om[i];
    objective += (piece.d0 + piece.d.dot(amb.mu)) * tk;
    const Vector dh = transform.half.transpose() * piece.d;
    for (int i = 0; i < m; ++i) objective += dh(i) * om[i];
  }

  if (tau > 0) {
    for (int i = 0; i < n; ++i) {
      const Matrix& delta = ds.lmi[i + 1];
      if (diag) {
        for (int r = 0; r < tau; ++r) stationarity[i] -= delta(r, r) * pb.var(z, r);
      } else {
        const Vector sv = svec(delta);
        for (int r = 0; r < sv.size(); ++r) stationarity[i] -= sv(r) * pb.var(z, r);
      }
    }
    if (diag) {
      for (int r = 0; r < tau; ++r) {
        pb.add_nonneg(pb.var(z, r));
        objective -= ds.lmi[0](r, r) * pb.var(z, r);
      }
    } else {
      pb.add_psd(pb.sym_matrix(z, tau));
      const Vector sv = svec(ds.lmi[0]);
      for (int r = 0; r < sv.size(); ++r) objective -= sv(r) * pb.var(z, r);
    }
  }
  for (int r = 0; r < neq; ++r) {
    for (int i = 0; i < n; ++i) stationarity[i] -= ds.eq_a(r, i) * pb.var(eta, r);
    objective += ds.eq_b(r) * pb.var(eta, r);
  }
  for (const LinExpr& e : stationarity) pb.add_equality(e);

  LinExpr minimized = -objective;
  if (penalty != nullptr) {
    if (penalty->beta.rows() != k || penalty->beta.cols() != m) {
      throw DimensionError("split multipliers must be K x m");
    }
    for (int kk = 0; kk < k; ++kk) {
      ExprVector mismatch = omega(kk);
      const ExprVector bp = evaluate_into(b, p_vec(kk));
      for (int i = 0; i < m; ++i) mismatch[i] -= bp[i];
      const VarSlice pt = pb.add_variables("penalty_" + std::to_string(kk), 1);
      pb.add_squared_norm_epigraph(mismatch, pb.var(pt, 0));
      for (int i = 0; i < m; ++i) minimized += penalty->beta(kk, i) * mismatch[i];
      minimized += penalty->rho * pb.var(pt, 0);
    }
  }
  pb.set_objective(minimized);
  return pb.build();
}

Matrix rows_of(const Vector& v, int rows, int cols) {
  Matrix out(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) out(r, c) = v(r * cols + c);
  }
  return out;
}

}  // namespace

Matrix pca_map(int m, int m1) {
  if (m1 < 1 || m1 > m) throw DimensionError("reduced dimension must lie in [1, m]");
  return Matrix::Identity(m, m1);
}

ConicProblem build_lb_inner(const DroInstance& instance, const Transform& transform,
                            const Matrix& factor) {
  if (factor.rows() != instance.m()) throw DimensionError("reduction factor has wrong row count");
  const int c = static_cast<int>(factor.cols());
  const bool full = c == instance.m() && factor == transform.half;
  Assembler as(instance);
  as.add_primal_core();
  const VarSlice q = as.pb.add_variables(full ? "q" : "q_r", c);
  const VarSlice qs = as.pb.add_variables(full ? "Q" : "Q_r", svec_length(c));
  const ExprMatrix qmat = as.pb.sym_matrix(qs, c);
  for (int kk = 0; kk < instance.k(); ++kk) {
    ExprVector off = as.direction(kk, factor);
    for (int i = 0; i < c; ++i) off[i] += as.pb.var(q, i);
    as.add_moment_lmi(as.block_scalar(kk), off, qmat);
  }
  LinExpr objective = as.pb.var(as.s, 0) + instance.ambiguity.gamma2 * as.trace(qmat);
  objective += as.norm_term(as.pb.vars(q));
  as.pb.set_objective(objective);
  return as.pb.build();
}

ConicProblem build_full_sdp(const DroInstance& instance) {
  const Transform tr = make_transform(instance.ambiguity);
  return build_lb_inner(instance, tr, tr.half);
}

ConicProblem build_pca_sdp(const DroInstance& instance, int m1) {
  const Transform tr = make_transform(instance.ambiguity);
  return build_lb_inner(instance, tr, tr.half * pca_map(instance.m(), m1));
}

ConicProblem build_lb_inner_fixed_b(const DroInstance& instance, const Matrix& b) {
  check_orthonormal_shape(instance, b);
  const Transform tr = make_transform(instance.ambiguity);
  return build_lb_inner(instance, tr, tr.half * b);
}

ConicProblem build_lb_dual(const DroInstance& instance, const Transform& transform,
                           const Matrix& b) {
  return build_lb_dual_impl(instance, transform, b, nullptr);
}

ConicProblem build_lb_dual_fixed_b(const DroInstance& instance, const Matrix& b) {
  return build_lb_dual_impl(instance, make_transform(instance.ambiguity), b, nullptr);
}

ConicProblem build_ub_family(const DroInstance& instance, const Transform& transform,
                             const Matrix& b, int m1) {
  return build_ub_impl(instance, transform, b, m1, nullptr,
                       m1 == b.cols() ? "Q_r" : "Q_r'");
}

ConicProblem build_ub_fixed_b(const DroInstance& instance, const Matrix& b) {
  return build_ub_impl(instance, make_transform(instance.ambiguity), b,
                       static_cast<int>(b.cols()), nullptr, "Q_r");
}

ConicProblem build_rlb_fixed_b(const DroInstance& instance, const Matrix& b1, const Matrix& b2) {
  if (b1.cols() + b2.cols() != instance.k()) {
    throw DimensionError("revisited map must have K columns in total");
  }
  if (b1.rows() != b2.rows() && b1.cols() > 0 && b2.cols() > 0) {
    throw DimensionError("revisited map blocks differ in row count");
  }
  Matrix b(instance.m(), instance.k());
  if (b1.cols() > 0) b.leftCols(b1.cols()) = b1;
  if (b2.cols() > 0) b.rightCols(b2.cols()) = b2;
  return build_ub_impl(instance, make_transform(instance.ambiguity), b,
                       static_cast<int>(b1.cols()), nullptr, "Q_r'");
}

ConicProblem build_ub_split(const DroInstance& instance, const Transform& transform,
                            const Matrix& b, int m1, const SplitPenalty& penalty) {
  return build_ub_impl(instance, transform, b, m1, &penalty,
                       m1 == b.cols() ? "Q_r" : "Q_r'");
}

ConicProblem build_lb_split(const DroInstance& instance, const Transform& transform,
                            const Matrix& b, const SplitPenalty& penalty) {
  return build_lb_dual_impl(instance, transform, b, &penalty);
}

FullSolution extract_full(const DroInstance& instance, const ConicProblem& problem,
                          const ConicSolution& solution) {
  FullSolution out;
  out.x = solution.var(problem, "x");
  out.s = solution.var(problem, "s")(0);
  out.lambda = rows_of(solution.var(problem, "lambda"), instance.k(), instance.support.rows());
  out.q = solution.var(problem, "q");
  out.q_big = smat(solution.var(problem, "Q"));
  out.objective = solution.objective;
  return out;
}

ReducedSolution extract_reduced(const DroInstance& instance, const ConicProblem& problem,
                                const ConicSolution& solution) {
  ReducedSolution out;
  const int k = instance.k();
  out.x = solution.var(problem, "x");
  out.s = solution.var(problem, "s")(0);
  out.lambda = rows_of(solution.var(problem, "lambda"), k, instance.support.rows());
  out.q = solution.var(problem, problem.var_map.count("q_r") ? "q_r" : "q");
  for (const char* name : {"Q_r", "Q_r'", "Q"}) {
    if (problem.var_map.count(name)) {
      const Vector sv = solution.var(problem, name);
      out.q_small = sv.size() == 0 ? Matrix(0, 0) : smat(sv);
      break;
    }
  }
  const int m1 = static_cast<int>(out.q_small.rows());
  if (problem.var_map.count("u")) {
    out.u = rows_of(solution.var(problem, "u"), k, m1);
    const Vector u2 = solution.var(problem, "u2");
    out.u2 = rows_of(u2, k, static_cast<int>(u2.size()) / std::max(k, 1));
  }
  out.objective = solution.objective;
  return out;
}

DualCertificate extract_dual(const DroInstance& instance, const Matrix& b,
                             const ConicProblem& problem, const ConicSolution& solution) {
  DualCertificate out;
  const int k = instance.k();
  const int m1 = static_cast<int>(b.cols());
  out.t = solution.var(problem, "t");
  out.p = rows_of(solution.var(problem, "p"), k, m1);
  const Vector big_p = solution.var(problem, "P");
  const int len = svec_length(m1);
  for (int kk = 0; kk < k; ++kk) out.big_p.push_back(smat(big_p.segment(kk * len, len)));
  if (problem.var_map.count("z")) {
    out.z = solution.var(problem, "z").asDiagonal();
  } else {
    const Vector zv = solution.var(problem, "Z");
    out.z = zv.size() == 0 ? Matrix(0, 0) : smat(zv);
  }
  if (problem.var_map.count("omega")) {
    out.omega = rows_of(solution.var(problem, "omega"), k, instance.m());
  } else {
    out.omega = out.p * b.transpose();
  }
  out.eta = solution.var(problem, "eta");
  // Only the fixed-map problem has the plain negated objective.
  out.objective = -solution.objective;
  return out;
}

Matrix residual_directions(const DroInstance& instance, const Transform& transform,
                           const Vector& x, const Matrix& lambda) {
  const int k = instance.k();
  Matrix g(instance.m(), k);
  for (int kk = 0; kk < k; ++kk) {
    Vector v = -piece_slope(instance.objective.pieces[kk], x);
    if (instance.support.rows() > 0) v += instance.support.a.transpose() * lambda.row(kk).transpose();
    g.col(kk) = transform.half.transpose() * v;
  }
  return g;
}

Matrix split_u_tilde(const DroInstance& instance, const Transform& transform,
                     const ReducedSolution& solution) {
  const Matrix g = residual_directions(instance, transform, solution.x, solution.lambda);
  Matrix out = g.transpose();
  out.rowwise() += solution.q.transpose();
  return out;
}

FullSolve solve_full(const DroInstance& instance, const SolverTolerances& tol) {
  FullSolve out;
  const ConicProblem problem = build_full_sdp(instance);
  out.solution = solve(problem, tol);
  if (out.solution.optimal()) out.full = extract_full(instance, problem, out.solution);
  return out;
}

namespace {

BoundValue certify(const ConicProblem& problem, const Matrix& b, const SolverTolerances& tol) {
  BoundValue out;
  out.b = b;
  out.solution = solve(problem, tol);
  out.status = out.solution.status;
  if (out.certified()) out.value = out.solution.objective;
  return out;
}

}  // namespace

BoundValue certify_lb(const DroInstance& instance, const Matrix& b, const SolverTolerances& tol) {
  check_orthonormal_shape(instance, b);
  const Matrix proj = project_stiefel(b);
  return certify(build_lb_inner_fixed_b(instance, proj), proj, tol);
}

BoundValue certify_ub(const DroInstance& instance, const Matrix& b, const SolverTolerances& tol) {
  check_orthonormal_shape(instance, b);
  const Matrix proj = project_stiefel(b);
  return certify(build_ub_fixed_b(instance, proj), proj, tol);
}

BoundValue certify_rlb(const DroInstance& instance, const Matrix& b, int m1,
                       const SolverTolerances& tol) {
  if (b.cols() != instance.k()) throw DimensionError("revisited map must have K columns");
  if (m1 < 0 || m1 > instance.k()) throw DimensionError("moment block size out of range");
  check_orthonormal_shape(instance, b);
  const Matrix proj = project_stiefel(b);
  return certify(build_rlb_fixed_b(instance, proj.leftCols(m1), proj.rightCols(instance.k() - m1)),
                 proj, tol);
}

}  // namespace odr
