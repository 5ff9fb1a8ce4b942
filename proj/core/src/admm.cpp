#include "odr_dro/admm.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <ostream>
#include <string>

#include "odr_dro/errors.hpp"

namespace odr {

void AdmmConfig::check() const {
  if (!(rho > 0.0) || !std::isfinite(rho)) throw InputError("admm: rho must be positive");
  if (!(tol_primal > 0.0) || !(tol_dual > 0.0)) throw InputError("admm: tolerances must be positive");
  if (max_iter < 1) throw InputError("admm: max_iter must be at least 1");
  if (!(time_limit > 0.0)) throw InputError("admm: time_limit must be positive");
}

OrthoMap procrustes_update(const Matrix& m_mat) {
  if (!m_mat.allFinite()) throw InputError("procrustes_update: non-finite input");
  if (m_mat.cols() > m_mat.rows()) throw DimensionError("procrustes_update: more columns than rows");
  const int cols = static_cast<int>(m_mat.cols());
  OrthoMap out;
  if (cols == 0) {
    out.b = Matrix(m_mat.rows(), 0);
    return out;
  }
  const SvdFactors f = svd(m_mat);
  const double top = f.singular(0);
  int rank = 0;
  while (rank < cols && f.singular(rank) > 1e-10 * top && top > 0.0) ++rank;
  if (rank == cols) {
    out.b = f.left * f.right.transpose();
    return out;
  }
  const Matrix left = gram_schmidt_extend(Matrix(f.left.leftCols(rank)), cols);
  out.b = left * f.right.transpose();
  return out;
}

Matrix lifted_c_step(const Matrix& b, const Matrix& lambda_u1, const Matrix& lambda_u2,
                     double rho) {
  const int m = static_cast<int>(b.rows());
  const Matrix lhs = Matrix::Identity(m, m) + b * b.transpose();
  const Matrix rhs = (b * lambda_u1.transpose() - lambda_u2) / rho + 2.0 * b;
  return lhs.llt().solve(rhs);
}

Matrix lifted_b_step(const Matrix& split_lhs, const Matrix& split_rhs, const Matrix& beta,
                     const Matrix& c_map, const Matrix& lambda_u1, const Matrix& lambda_u2,
                     double rho) {
  const int m = static_cast<int>(c_map.rows());
  // rho ((I + C C') B + B Y) = R with Y = sum_k u_k u_k'.
  const Matrix left = Matrix::Identity(m, m) + c_map * c_map.transpose();
  const Matrix right = split_rhs.transpose() * split_rhs;
  const Matrix r = (beta + rho * split_lhs).transpose() * split_rhs + c_map * lambda_u1 +
                   lambda_u2 + 2.0 * rho * c_map;
  const SpectralFactors el = sym_eig(left), er = sym_eig(right);
  Matrix core = el.u.transpose() * (r / rho) * er.u;
  for (int j = 0; j < core.cols(); ++j) {
    for (int i = 0; i < core.rows(); ++i) core(i, j) /= el.lambda(i) + er.lambda(j);
  }
  return el.u * core * er.u.transpose();
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

double max_row_norm(const Matrix& a) {
  double out = 0.0;
  for (int r = 0; r < a.rows(); ++r) out = std::max(out, a.row(r).norm());
  return out;
}

Matrix initial_map(const DroInstance& instance, int cols, const AdmmConfig& cfg) {
  if (!cfg.init_b) return pca_map(instance.m(), cols);
  if (cfg.init_b->rows() != instance.m() || cfg.init_b->cols() != cols) {
    throw DimensionError("admm: initial map has the wrong shape");
  }
  return project_stiefel(*cfg.init_b);
}

// Orthonormal map whose span holds the leading split targets, rotated to
// sit as close as possible to the current iterate.
Matrix span_map(const Matrix& targets, const Matrix& current) {
  const int cols = static_cast<int>(current.cols());
  const SvdFactors f = svd(Matrix(targets.transpose()));
  int rank = 0;
  const int limit = std::min<int>(cols, static_cast<int>(f.singular.size()));
  while (rank < limit && f.singular(rank) > 1e-9 * f.singular(0)) ++rank;
  const Matrix w = gram_schmidt_extend(Matrix(f.left.leftCols(rank)), cols);
  try {
    return w * project_stiefel(Matrix(w.transpose() * current));
  } catch (const RankError&) {
    return w;
  }
}

// Which candidate value to keep, and the sign of the raw objective.
enum class Side { kLower, kUpper };

using Certifier = std::function<BoundValue(const Matrix&)>;

// Keeps the best certified value over the candidate maps. The final iterate
// is always the second candidate.
void certify_candidates(AdmmReport& report, Side side, const Certifier& certify,
                        const std::vector<Matrix>& candidates) {
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    BoundValue bv;
    try {
      bv = certify(candidates[i]);
    } catch (const RankError&) {
      continue;
    }
    if (i == 1) {
      report.final_b_certified = bv.certified();
      if (bv.certified()) report.final_b_bound = bv.value;
    }
    if (!bv.certified()) continue;
    const bool better = !report.certified ||
                        (side == Side::kLower ? bv.value > report.certified_bound
                                              : bv.value < report.certified_bound);
    if (better) {
      report.certified = true;
      report.certified_bound = bv.value;
      report.certified_b = bv.b;
    }
  }
}

// One subproblem (i) solve at the current map and multipliers.
struct SplitStep {
  bool ok = false;
  std::string failure;
  Matrix lhs;  // K x m
  Matrix rhs;  // K x cols
  double objective = 0.0;        // subproblem objective as minimized
  double penalty_weight = 0.0;   // sum_k tau_k
};

// Subproblem iterates only steer the map, so reduced accuracy is acceptable.
bool usable(const ConicSolution& sol) {
  return sol.optimal() || sol.status == SolveStatus::kNearOptimal;
}

using StepFn = std::function<SplitStep(const Matrix& b, const SplitPenalty& penalty)>;

double penalty_sum(const ConicProblem& problem, const ConicSolution& sol, int k) {
  double out = 0.0;
  for (int kk = 0; kk < k; ++kk) out += sol.var(problem, "penalty_" + std::to_string(kk))(0);
  return out;
}

void trace_line(const AdmmConfig& cfg, int iter, double objective, double primal, double dual,
                double rho) {
  if (cfg.trace == nullptr) return;
  *cfg.trace << iter << ',' << objective << ',' << primal << ',' << dual << ',' << rho << '\n';
}

void trace_header(const AdmmConfig& cfg) {
  if (cfg.trace != nullptr) *cfg.trace << "iter,objective,primal,dual,rho\n";
}

double balance_rho(const AdmmConfig& cfg, double rho, double primal, double dual) {
  if (!cfg.adaptive_rho) return rho;
  const double lo = cfg.rho * 1e-2, hi = cfg.rho * 1e2;
  if (primal > 10.0 * dual) return std::min(hi, 2.0 * rho);
  if (dual > 10.0 * primal) return std::max(lo, 0.5 * rho);
  return rho;
}

// Raw objective of the unpenalized problem at a subproblem solution.
double raw_value(Side side, const SplitStep& step, const Matrix& beta, const Matrix& b, double rho) {
  const Matrix mismatch = step.lhs - step.rhs * b.transpose();
  const double penalized = step.objective - (beta.cwiseProduct(mismatch)).sum() -
                           rho * step.penalty_weight;
  return side == Side::kLower ? -penalized : penalized;
}

AdmmReport procrustes_loop(const DroInstance& instance, const Matrix& b0, Side side,
                           const StepFn& step_fn, const Certifier& certify,
                           const AdmmConfig& cfg) {
  cfg.check();
  const auto t_start = Clock::now();
  AdmmReport report;
  AdmmState& st = report.state;
  const int k = instance.k(), m = instance.m();
  st.b = b0;
  st.beta = Matrix::Zero(k, m);
  double rho = cfg.rho;
  trace_header(cfg);
  for (int it = 1; it <= cfg.max_iter; ++it) {
    const auto t_iter = Clock::now();
    SplitPenalty penalty{rho, st.beta};
    const SplitStep step = step_fn(st.b, penalty);
    if (!step.ok) {
      report.abort_reason = step.failure;
      report.iteration_seconds.push_back(seconds_since(t_iter));
      break;
    }
    report.raw_objective = raw_value(side, step, st.beta, st.b, rho);
    const Matrix target = (st.beta + rho * step.lhs).transpose() * step.rhs;
    const Matrix b_new = procrustes_update(target).b;
    st.last_residual = step.lhs - step.rhs * b_new.transpose();
    st.beta += rho * st.last_residual;
    st.rho_history.push_back(rho);
    st.split_lhs = step.lhs;
    st.split_rhs = step.rhs;
    const double primal = max_row_norm(st.last_residual);
    const double dual = (b_new - st.b).norm();
    st.b = b_new;
    st.iteration = it;
    st.primal_history.push_back(primal);
    st.dual_history.push_back(dual);
    report.primal_residual = primal;
    report.dual_residual = dual;
    report.iterations = it;
    report.iteration_seconds.push_back(seconds_since(t_iter));
    trace_line(cfg, it, report.raw_objective, primal, dual, rho);
    if (primal <= cfg.tol_primal && dual <= cfg.tol_dual) {
      report.converged = true;
      break;
    }
    if (seconds_since(t_start) > cfg.time_limit) {
      report.abort_reason = "time limit";
      break;
    }
    rho = balance_rho(cfg, rho, primal, dual);
  }
  std::vector<Matrix> candidates{b0, st.b};
  if (st.split_lhs.size() > 0) candidates.push_back(span_map(st.split_lhs, st.b));
  certify_candidates(report, side, certify, candidates);
  report.total_seconds = seconds_since(t_start);
  return report;
}

StepFn upper_step(const DroInstance& instance, const Transform& tr, int block,
                  const SolverTolerances& tol) {
  return [&instance, &tr, block, tol](const Matrix& b, const SplitPenalty& penalty) {
    SplitStep out;
    const ConicProblem problem = build_ub_split(instance, tr, b, block, penalty);
    const ConicSolution sol = solve(problem, tol);
    if (!usable(sol)) {
      out.failure = std::string("subproblem solve: ") + to_string(sol.status);
      return out;
    }
    const ReducedSolution red = extract_reduced(instance, problem, sol);
    out.lhs = split_u_tilde(instance, tr, red);
    out.rhs = Matrix(instance.k(), b.cols());
    if (red.u.cols() > 0) out.rhs.leftCols(red.u.cols()) = red.u;
    if (red.u2.cols() > 0) out.rhs.rightCols(red.u2.cols()) = red.u2;
    out.objective = sol.objective;
    out.penalty_weight = penalty_sum(problem, sol, instance.k());
    out.ok = true;
    return out;
  };
}

void check_block(const DroInstance& instance, int m1, int lo, int hi) {
  if (m1 < lo || m1 > hi) {
    throw DimensionError("admm: reduced dimension " + std::to_string(m1) + " outside [" +
                         std::to_string(lo) + ", " + std::to_string(hi) + "]");
  }
  (void)instance;
}

}  // namespace

AdmmReport run_ub(const DroInstance& instance, int m1, const AdmmConfig& cfg) {
  check_block(instance, m1, 1, instance.m());
  const Transform tr = make_transform(instance.ambiguity);
  const SolverTolerances tol = cfg.solver;
  return procrustes_loop(instance, initial_map(instance, m1, cfg), Side::kUpper,
                         upper_step(instance, tr, m1, tol),
                         [&](const Matrix& b) { return certify_ub(instance, b, tol); }, cfg);
}

AdmmReport run_rlb(const DroInstance& instance, int m1, const AdmmConfig& cfg) {
  check_block(instance, m1, 0, instance.k());
  if (instance.k() > instance.m()) throw DimensionError("admm: revisited map needs K <= m");
  const Transform tr = make_transform(instance.ambiguity);
  const SolverTolerances tol = cfg.solver;
  // The revisited bound is a minimum over maps, so the smallest value wins.
  return procrustes_loop(instance, initial_map(instance, instance.k(), cfg), Side::kUpper,
                         upper_step(instance, tr, m1, tol),
                         [&](const Matrix& b) { return certify_rlb(instance, b, m1, tol); }, cfg);
}

AdmmReport run_lb(const DroInstance& instance, int m1, const AdmmConfig& cfg) {
  check_block(instance, m1, 1, instance.m());
  const Transform tr = make_transform(instance.ambiguity);
  const SolverTolerances tol = cfg.solver;
  const int k = instance.k();
  StepFn step = [&](const Matrix& b, const SplitPenalty& penalty) {
    SplitStep out;
    const ConicProblem problem = build_lb_split(instance, tr, b, penalty);
    const ConicSolution sol = solve(problem, tol);
    if (!usable(sol)) {
      out.failure = std::string("subproblem solve: ") + to_string(sol.status);
      return out;
    }
    const DualCertificate cert = extract_dual(instance, b, problem, sol);
    out.lhs = cert.omega;
    out.rhs = cert.p;
    out.objective = sol.objective;
    out.penalty_weight = penalty_sum(problem, sol, k);
    out.ok = true;
    return out;
  };
  return procrustes_loop(instance, initial_map(instance, m1, cfg), Side::kLower, step,
                         [&](const Matrix& b) { return certify_lb(instance, b, tol); }, cfg);
}

AdmmReport run_ub_lifted(const DroInstance& instance, int m1, const AdmmConfig& cfg) {
  cfg.check();
  check_block(instance, m1, 1, instance.m());
  const auto t_start = Clock::now();
  const Transform tr = make_transform(instance.ambiguity);
  const SolverTolerances tol = cfg.solver;
  const int k = instance.k(), m = instance.m();
  const StepFn step_fn = upper_step(instance, tr, m1, tol);
  AdmmReport report;
  AdmmState& st = report.state;
  const Matrix b0 = initial_map(instance, m1, cfg);
  st.b = b0;
  st.c_map = b0;
  st.beta = Matrix::Zero(k, m);
  st.lambda_u1 = Matrix::Zero(m1, m1);
  st.lambda_u2 = Matrix::Zero(m, m1);
  double rho = cfg.rho;
  trace_header(cfg);
  for (int it = 1; it <= cfg.max_iter; ++it) {
    const auto t_iter = Clock::now();
    // Subproblem (i): the conic block and the C-update separate given B.
    const SplitStep step = step_fn(st.b, SplitPenalty{rho, st.beta});
    if (!step.ok) {
      report.abort_reason = step.failure;
      report.iteration_seconds.push_back(seconds_since(t_iter));
      break;
    }
    st.c_map = lifted_c_step(st.b, st.lambda_u1, st.lambda_u2, rho);
    report.raw_objective = raw_value(Side::kUpper, step, st.beta, st.b, rho);
    const Matrix b_new = lifted_b_step(step.lhs, step.rhs, st.beta, st.c_map, st.lambda_u1,
                                       st.lambda_u2, rho);
    st.last_residual = step.lhs - step.rhs * b_new.transpose();
    const Matrix r1 = Matrix::Identity(m1, m1) - st.c_map.transpose() * b_new;
    const Matrix r2 = st.c_map - b_new;
    st.beta += rho * st.last_residual;
    st.lambda_u1 += rho * r1;
    st.lambda_u2 += rho * r2;
    st.rho_history.push_back(rho);
    st.split_lhs = step.lhs;
    st.split_rhs = step.rhs;
    const double primal = std::max({max_row_norm(st.last_residual), r1.norm(), r2.norm()});
    const double dual = (b_new - st.b).norm();
    st.b = b_new;
    st.iteration = it;
    st.primal_history.push_back(primal);
    st.dual_history.push_back(dual);
    report.primal_residual = primal;
    report.dual_residual = dual;
    report.iterations = it;
    report.iteration_seconds.push_back(seconds_since(t_iter));
    trace_line(cfg, it, report.raw_objective, primal, dual, rho);
    if (primal <= cfg.tol_primal && dual <= cfg.tol_dual) {
      report.converged = true;
      break;
    }
    if (seconds_since(t_start) > cfg.time_limit) {
      report.abort_reason = "time limit";
      break;
    }
    rho = balance_rho(cfg, rho, primal, dual);
  }
  std::vector<Matrix> candidates{b0, st.b};
  if (st.split_lhs.size() > 0) {
    Matrix current = st.b;
    try {
      current = project_stiefel(st.b);
    } catch (const RankError&) {
      current = b0;
    }
    candidates.push_back(span_map(st.split_lhs, current));
  }
  certify_candidates(report, Side::kUpper,
                     [&](const Matrix& b) { return certify_ub(instance, b, tol); }, candidates);
  report.total_seconds = seconds_since(t_start);
  return report;
}

}  // namespace odr
