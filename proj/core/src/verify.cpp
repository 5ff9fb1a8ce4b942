#include "odr_dro/verify.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>

#include "odr_dro/admm.hpp"
#include "odr_dro/applications.hpp"
#include "odr_dro/bounds.hpp"
#include "odr_dro/conic_builder.hpp"
#include "odr_dro/harness.hpp"
#include "odr_dro/instance_io.hpp"
#include "odr_dro/linalg.hpp"
#include "odr_dro/rng.hpp"

namespace odr {
namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

double rel(double v, double tol) { return tol * (1.0 + std::abs(v)); }

Matrix gaussian(Rng& rng, int r, int c) {
  Matrix out(r, c);
  for (int j = 0; j < c; ++j) {
    for (int i = 0; i < r; ++i) out(i, j) = rng.normal();
  }
  return out;
}

Matrix random_stiefel(Rng& rng, int m, int k) { return project_stiefel(gaussian(rng, m, k)); }

// Collects failures, keeping the first few messages.
class Tally {
 public:
  void check(bool ok, const std::string& what) {
    ++checks_;
    if (ok) return;
    ++failures_;
    if (notes_.size() < 4) notes_.push_back(what);
  }
  int checks() const { return checks_; }
  int failures() const { return failures_; }
  std::string summary() const {
    std::string out = std::to_string(checks_ - failures_) + "/" + std::to_string(checks_) + " checks";
    for (const auto& n : notes_) out += "; " + n;
    return out;
  }

 private:
  int checks_ = 0;
  int failures_ = 0;
  std::vector<std::string> notes_;
};

std::string fmt(double v, int precision = 6) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.*g", precision, v);
  return buf;
}

// Optimality audit of every conic solve, installed for the whole run.
struct SolveAudit {
  std::mutex mutex;
  int optimal = 0;
  int violations = 0;
  std::string first;

  void observe(const ConicProblem& p, const ConicSolution& sol) {
    if (!sol.optimal()) return;
    const double scale = 1.0 + std::abs(sol.objective);
    const double gap = std::abs(sol.objective - sol.dual_objective);
    const double comp = std::abs(sol.s.dot(sol.z));
    const double viol = constraint_violation(p, sol.x);
    const bool ok = gap <= 1e-6 * scale && comp <= 1e-6 * scale && viol <= 1e-6 * scale;
    std::lock_guard<std::mutex> lock(mutex);
    ++optimal;
    if (!ok) {
      ++violations;
      if (first.empty()) first = "gap " + fmt(gap) + " s'z " + fmt(comp) + " infeas " + fmt(viol);
    }
  }
};

// --- criterion 3 data, shared with criterion 6 -----------------------------

struct LowerRecord {
  std::string where;
  double full = 0.0;
  double bound = 0.0;
  std::optional<double> gap_bound;
};

struct SandwichData {
  Tally tally;
  int uncertified = 0;
  std::vector<std::string> uncertified_where;
  int instances = 0;
  std::vector<LowerRecord> lowers;
  double seconds = 0.0;
};

SandwichData run_sandwich_suite(std::ostream* progress) {
  SandwichData data;
  const auto t0 = Clock::now();
  AdmmConfig cfg;
  cfg.max_iter = 10;
  for (int app = 0; app < 2; ++app) {
    for (int m : {10, 20, 40}) {
      for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const DroInstance in = app == 0 ? gen_newsvendor(m, seed) : gen_cvar(m, seed);
        const std::string tag = in.label;
        ++data.instances;
        const FullSolve fs = solve_full(in);
        if (!fs.solution.optimal()) {
          data.tally.check(false, tag + ": full solve " + to_string(fs.solution.status));
          continue;
        }
        const double full = fs.solution.objective;
        const int k = in.k();
        Rng rng(seed, "sandwich-random-map");
        const AdmmReport lb_run = run_lb(in, k, cfg);
        const AdmmReport ub_run = run_ub(in, k, cfg);
        struct Named {
          const char* name;
          Matrix lower_map, upper_map;
        };
        const Matrix pca = pca_map(m, k);
        const Matrix heur = heuristic_direction(in, default_heuristic_direction(in), k).b;
        const Matrix rnd = random_stiefel(rng, m, k);
        const Named maps[] = {{"pca", pca, pca},
                              {"admm-final", lb_run.state.b, ub_run.state.b},
                              {"heuristic", heur, heur},
                              {"random", rnd, rnd}};
        for (const Named& nm : maps) {
          const std::string where = tag + " " + nm.name;
          const BoundValue lo = certify_lb(in, nm.lower_map);
          if (lo.certified()) {
            data.tally.check(lo.value <= full + rel(full, 1e-6),
                             where + ": lb " + fmt(lo.value, 10) + " > full " + fmt(full, 10));
            const ConicProblem p = build_lb_inner_fixed_b(in, lo.b);
            const ReducedSolution red = extract_reduced(in, p, lo.solution);
            data.lowers.push_back({where, full, lo.value, gap_bound(in, lo.b, red).bound});
          } else {
            ++data.uncertified;
            data.uncertified_where.push_back(where + " lb " + to_string(lo.status));
          }
          const BoundValue up = certify_ub(in, nm.upper_map);
          if (up.certified()) {
            data.tally.check(up.value >= full - rel(full, 1e-6),
                             where + ": ub " + fmt(up.value, 10) + " < full " + fmt(full, 10));
          } else if (up.status != SolveStatus::kPrimalInfeasible) {
            ++data.uncertified;
            data.uncertified_where.push_back(where + " ub " + to_string(up.status));
          }
        }
      }
      if (progress) *progress << "  sandwich: " << (app == 0 ? "newsvendor" : "cvar") << " m=" << m
                              << " done (" << fmt(since(t0), 3) << " s)\n";
    }
  }
  data.seconds = since(t0);
  return data;
}

// --- individual criteria ---------------------------------------------------

CriterionResult titled(int id, const char* title) {
  CriterionResult r;
  r.id = id;
  r.title = title;
  return r;
}

CriterionResult criterion_fixture_one() {
  CriterionResult r = titled(1, "small CVaR fixture values");
  r.budget_seconds = 5.0;
  const auto t0 = Clock::now();
  Tally t;
  const DroInstance in = cvar_pca_counterexample();
  const FullSolve fs = solve_full(in);
  t.check(fs.full.has_value(), "full solve not optimal");
  if (fs.full) {
    t.check(std::abs(fs.solution.objective - 2.0) <= 1e-3, "full " + fmt(fs.solution.objective));
    t.check(std::abs(fs.full->x(3) - 2.0) <= 1e-3, "t " + fmt(fs.full->x(3)));
  }
  const BoundValue largest = certify_lb(in, pca_map(3, 1));
  Matrix least_map = Matrix::Zero(3, 1);
  least_map(2, 0) = 1.0;
  const BoundValue least = certify_lb(in, least_map);
  t.check(largest.certified() && std::abs(largest.value - 1.0) <= 1e-3, "largest " + fmt(largest.value));
  t.check(least.certified() && std::abs(least.value - 2.0) <= 1e-3, "least " + fmt(least.value));
  r.seconds = since(t0);
  r.passed = t.failures() == 0;
  r.detail = "full " + fmt(fs.solution.objective) + ", largest-component " + fmt(largest.value) +
             ", least-component " + fmt(least.value) + "; " + t.summary();
  return r;
}

CriterionResult criterion_fixture_two() {
  CriterionResult r = titled(2, "four-dimensional low-rank fixture");
  r.budget_seconds = 5.0;
  const auto t0 = Clock::now();
  Tally t;
  const std::vector<DroInstance> branches = low_rank_counterexample();
  const Matrix v = low_rank_counterexample_map();
  double full = INFINITY, lb_v = INFINITY, ub_v = INFINITY;
  int rank = -1;
  for (const DroInstance& in : branches) {
    const FullSolve fs = solve_full(in);
    if (fs.full && fs.solution.objective < full) {
      full = fs.solution.objective;
      rank = numerical_rank(low_rank_reduce(in, *fs.full).first.q_big);
    }
    const BoundValue lo = certify_lb(in, v);
    if (lo.certified()) lb_v = std::min(lb_v, lo.value);
    const BoundValue up = certify_ub(in, v);
    if (up.certified()) ub_v = std::min(ub_v, up.value);
  }
  t.check(std::abs(full - 5.9882) <= 2e-3, "full " + fmt(full));
  t.check(rank == 2, "rank " + std::to_string(rank));
  t.check(std::abs(lb_v - 5.1139) <= 2e-3, "lb at map " + fmt(lb_v));
  t.check(std::abs(ub_v - 5.9882) <= 5e-3, "ub at map " + fmt(ub_v));
  r.seconds = since(t0);
  r.passed = t.failures() == 0;
  r.detail = "full " + fmt(full) + ", rank " + std::to_string(rank) + ", lb(V) " + fmt(lb_v) +
             ", ub(V) " + fmt(ub_v) + "; " + t.summary();
  return r;
}

CriterionResult criterion_sandwich(const SandwichData& d) {
  CriterionResult r = titled(3, "sandwich suite, 120 instances x 4 maps");
  r.budget_seconds = 180.0;
  r.seconds = d.seconds;
  r.passed = d.tally.failures() == 0;
  r.detail = std::to_string(d.tally.failures()) + " violations, " + std::to_string(d.uncertified) +
             " uncertified solves";
  for (std::size_t i = 0; i < d.uncertified_where.size() && i < 8; ++i) {
    r.detail += (i == 0 ? " (" : ", ") + d.uncertified_where[i];
  }
  if (!d.uncertified_where.empty()) r.detail += ")";
  r.detail += "; " + d.tally.summary();
  return r;
}

double median(std::vector<double> v) {
  if (v.empty()) return NAN;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

CriterionResult criterion_quality(std::ostream* progress) {
  CriterionResult r = titled(4, "alternating bounds at m = 40 newsvendor");
  r.budget_seconds = 300.0;
  const auto t0 = Clock::now();
  Tally t;
  std::vector<double> gap1, gap2;
  std::ostringstream rows;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const DroInstance in = gen_newsvendor(40, seed);
    const FullSolve fs = solve_full(in);
    if (!fs.solution.optimal()) {
      t.check(false, in.label + ": full solve failed");
      continue;
    }
    const double full = fs.solution.objective;
    const AdmmReport lb = run_lb(in, in.k());
    const AdmmReport ub = run_ub(in, in.k());
    const BoundValue pca_lo = certify_lb(in, pca_map(40, 8));
    const BoundValue pca_up = certify_ub(in, pca_map(40, 8));
    t.check(lb.certified && ub.certified, in.label + ": alternating bound not certified");
    if (!(lb.certified && ub.certified)) continue;
    const GapMetrics odr = gap_metrics(lb.certified_bound, ub.certified_bound, full);
    gap1.push_back(*odr.gap1);
    gap2.push_back(*odr.gap2);
    // An infeasible PCA upper problem bounds by +inf, so its interval is infinite.
    double pca_interval = INFINITY;
    if (pca_lo.certified() && pca_up.certified()) {
      pca_interval = gap_metrics(pca_lo.value, pca_up.value, std::nullopt).interval.value_or(INFINITY);
    } else if (!pca_lo.certified() || pca_up.status != SolveStatus::kPrimalInfeasible) {
      t.check(false, in.label + ": PCA bound failed");
    }
    const double odr_interval = odr.interval.value_or(INFINITY);
    t.check(odr_interval < pca_interval,
            in.label + ": interval " + fmt(odr_interval) + " vs PCA " + fmt(pca_interval));
    rows << " [" << fmt(*odr.gap1, 3) << "%, " << fmt(*odr.gap2, 3) << "%, " << fmt(odr_interval, 3)
         << "% vs " << fmt(pca_interval, 3) << "%]";
    if (progress) *progress << "  quality: seed " << seed << " done (" << fmt(since(t0), 3) << " s)\n";
  }
  const double g1 = median(gap1), g2 = median(gap2);
  t.check(g1 <= 0.5, "median gap1 " + fmt(g1));
  t.check(g2 <= 3.0, "median gap2 " + fmt(g2));
  r.seconds = since(t0);
  r.passed = t.failures() == 0;
  r.detail = "median gap1 " + fmt(g1, 3) + "%, median gap2 " + fmt(g2, 3) + "%; per instance [gap1, gap2, "
             "interval vs PCA-20%]" + rows.str() + "; " + t.summary();
  return r;
}

CriterionResult criterion_constructions() {
  CriterionResult r = titled(5, "low-rank reduction and lifted feasible point");
  const auto t0 = Clock::now();
  Tally t;
  for (int i = 0; i < 20; ++i) {
    const int m = 3 + i % 6;
    const DroInstance in = i % 2 == 0 ? gen_cvar(m, 100 + i) : gen_newsvendor(m, 100 + i);
    const FullSolve fs = solve_full(in);
    if (!fs.full) {
      t.check(false, in.label + ": full solve failed");
      continue;
    }
    const double full = fs.solution.objective;
    try {
      const auto [red, factors] = low_rank_reduce(in, *fs.full);
      t.check(std::abs(red.objective - full) <= rel(full, 1e-6), in.label + ": objective moved");
      const double viol = full_violation(in, red);
      t.check(viol <= 1e-7, in.label + ": reduced violation " + fmt(viol));
      const int k = in.k();
      for (int m1 : {k, k + 1}) {
        if (m1 > m) continue;
        const auto [pt, map] = feasible_from_factors(in, red, factors, m1);
        const ConicProblem p = build_lb_inner_fixed_b(in, map.b);
        const double pv = constraint_violation(p, pack_reduced(in, p, pt));
        t.check(std::abs(pt.objective - full) <= rel(full, 1e-6) && pv <= 1e-7,
                in.label + " m1=" + std::to_string(m1) + ": value " + fmt(pt.objective, 10) + " viol " +
                    fmt(pv));
      }
    } catch (const Error& e) {
      t.check(false, in.label + ": " + e.what());
    }
  }
  r.seconds = since(t0);
  r.passed = t.failures() == 0;
  r.detail = t.summary();
  return r;
}

CriterionResult criterion_gap_bound(const SandwichData& d) {
  CriterionResult r = titled(6, "gap bound on the sandwich suite");
  Tally t;
  int undefined = 0;
  double worst_ratio = 0.0;
  for (const LowerRecord& rec : d.lowers) {
    if (!rec.gap_bound) {
      ++undefined;
      continue;
    }
    const double gap = rec.full - rec.bound;
    t.check(gap <= *rec.gap_bound + 1e-8,
            rec.where + ": gap " + fmt(gap) + " > bound " + fmt(*rec.gap_bound));
    if (*rec.gap_bound > 0) worst_ratio = std::max(worst_ratio, gap / *rec.gap_bound);
  }
  r.passed = t.failures() == 0;
  r.detail = std::to_string(undefined) + " undefined, largest gap/bound " + fmt(worst_ratio, 3) + "; " +
             t.summary();
  return r;
}

CriterionResult criterion_dominance() {
  CriterionResult r = titled(7, "sampled optimality of the closed-form maps");
  const auto t0 = Clock::now();
  Tally procrustes, heuristic;
  for (int rep = 0; rep < 100; ++rep) {
    Rng rng(rep, "dominance");
    const int m = 2 + rep % 7;
    const int k = 1 + rep % m;
    const Matrix target = gaussian(rng, m, k);
    const Matrix best = procrustes_update(target).b;
    const double top = (target.array() * best.array()).sum();
    int beaten = 0;
    for (int s = 0; s < 1000; ++s) {
      if ((target.array() * random_stiefel(rng, m, k).array()).sum() > top + 1e-10) ++beaten;
    }
    procrustes.check(beaten == 0, "procrustes rep " + std::to_string(rep));

    const DroInstance in = gen_newsvendor(m, rep);
    const Vector dir = gaussian(rng, m, 1);
    const Matrix hb = heuristic_direction(in, dir, k).b;
    const Vector proj = make_transform(in.ambiguity).half.transpose() * dir;
    const double h_top = (hb.transpose() * proj).squaredNorm();
    beaten = std::abs(h_top - proj.squaredNorm()) > 1e-9 * proj.squaredNorm() ? 1 : 0;
    for (int s = 0; s < 1000; ++s) {
      if ((random_stiefel(rng, m, k).transpose() * proj).squaredNorm() > h_top + 1e-9 * h_top) ++beaten;
    }
    heuristic.check(beaten == 0, "heuristic rep " + std::to_string(rep));
  }
  r.seconds = since(t0);
  r.passed = procrustes.failures() == 0 && heuristic.failures() == 0;
  r.detail = "procrustes " + procrustes.summary() + "; whitened direction " + heuristic.summary();
  return r;
}

CriterionResult criterion_rank_equivalence() {
  CriterionResult r = titled(8, "rank-bounded PSD order via compressions");
  const auto t0 = Clock::now();
  Tally t;
  int below_count = 0;
  for (int trial = 0; trial < 100; ++trial) {
    Rng rng(trial, "rank-equivalence");
    const int m = 1 + trial % 8;
    const int m1 = 1 + (trial / 8) % m;
    const int rank = 1 + trial % m1;
    const Matrix f = gaussian(rng, m, rank);
    Matrix x = f * f.transpose();
    x *= rng.uniform(0.3, 1.7) / sym_eig(x).lambda(0);
    const bool below = min_eigenvalue(Matrix::Identity(m, m) - x) >= -1e-9;
    below_count += below;
    std::vector<Matrix> maps;
    for (int j = 0; j < 50; ++j) maps.push_back(random_stiefel(rng, m, m1));
    maps.push_back(sym_eig(x).u.leftCols(m1));
    bool all_below = true;
    for (const Matrix& b : maps) {
      if (min_eigenvalue(Matrix::Identity(m1, m1) - b.transpose() * x * b) < -1e-9) all_below = false;
    }
    // below implies every compression is below; the top-eigenvector
    // compression witnesses the converse.
    t.check(below == all_below, "trial " + std::to_string(trial));
  }
  r.seconds = since(t0);
  r.passed = t.failures() == 0;
  r.detail = std::to_string(below_count) + " of 100 below the identity; " + t.summary();
  return r;
}

CriterionResult criterion_conic(const SolveAudit& audit_before) {
  CriterionResult r = titled(9, "conic solver analytic problems and optimality audit");
  const auto t0 = Clock::now();
  Tally t;
  const auto expect = [&](const ConicProblem& p, double want, const std::string& name) {
    const ConicSolution sol = solve(p);
    t.check(sol.optimal() && std::abs(sol.objective - want) <= 1e-6,
            name + ": " + to_string(sol.status) + " " + fmt(sol.objective, 10));
  };
  {
    ProblemBuilder pb;
    const VarSlice x = pb.add_variables("x", 2);
    pb.add_nonneg(pb.var(x, 0));
    pb.add_nonneg(pb.var(x, 1));
    pb.add_equality(pb.var(x, 0) + pb.var(x, 1) - LinExpr(1.0));
    pb.set_objective(pb.var(x, 0) + 2.0 * pb.var(x, 1));
    expect(pb.build(), 1.0, "lp");
  }
  {
    ProblemBuilder pb;
    const VarSlice s = pb.add_variables("t", 1);
    pb.add_soc({pb.var(s, 0), LinExpr(1.0), LinExpr(1.0)});
    pb.set_objective(pb.var(s, 0));
    expect(pb.build(), std::sqrt(2.0), "soc");
  }
  {
    Matrix c(3, 3);
    c << 2, -1, 0, -1, 3, 0.5, 0, 0.5, 1;
    ProblemBuilder pb;
    const VarSlice s = pb.add_variables("t", 1);
    ExprMatrix mat(3, ExprVector(3));
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) mat[i][j] = (i == j ? pb.var(s, 0) : LinExpr(0.0)) - LinExpr(c(i, j));
    }
    pb.add_psd(mat);
    pb.set_objective(pb.var(s, 0));
    expect(pb.build(), sym_eig(c).lambda(0), "max eigenvalue");
  }
  {
    ProblemBuilder pb;
    const VarSlice x = pb.add_variables("x", 1);
    pb.add_nonneg(pb.var(x, 0) - LinExpr(2.0));
    pb.add_nonneg(LinExpr(1.0) - pb.var(x, 0));
    pb.set_objective(pb.var(x, 0));
    const ConicSolution sol = solve(pb.build());
    t.check(sol.status == SolveStatus::kPrimalInfeasible, "infeasible: " + std::string(to_string(sol.status)));
  }
  {
    ProblemBuilder pb;
    const VarSlice x = pb.add_variables("x", 1);
    pb.add_nonneg(LinExpr(1.0) - pb.var(x, 0));
    pb.set_objective(pb.var(x, 0));
    const ConicSolution sol = solve(pb.build());
    t.check(sol.status == SolveStatus::kDualInfeasible, "unbounded: " + std::string(to_string(sol.status)));
  }
  const int audited = audit_before.optimal;
  t.check(audit_before.violations == 0, "audit: " + audit_before.first);
  r.seconds = since(t0);
  r.passed = t.failures() == 0;
  r.detail = std::to_string(audited) + " optimal solves audited, " + std::to_string(audit_before.violations) +
             " with gap/complementarity/feasibility above 1e-6; " + t.summary();
  return r;
}

std::string bench_csv(const std::vector<std::string>& instance_json) {
  std::vector<MatrixInstance> instances;
  for (std::size_t i = 0; i < instance_json.size(); ++i) {
    const DroInstance in = instance_from_json(instance_json[i]);
    instances.push_back({in.m(), static_cast<int>(i), in});
  }
  std::vector<RunSpec> specs;
  for (Method m : {Method::kFull, Method::kPcaLb, Method::kOdrLb, Method::kOdrUb}) {
    RunSpec s;
    s.method = m;
    s.admm.max_iter = 30;
    specs.push_back(s);
  }
  std::ostringstream csv;
  write_csv(csv, run_matrix(instances, specs), false);
  return csv.str();
}

CriterionResult criterion_determinism() {
  CriterionResult r = titled(10, "seeded generation and bench are byte-stable");
  const auto t0 = Clock::now();
  Tally t;
  const auto generate = [] {
    std::vector<std::string> out;
    for (std::uint64_t seed = 0; seed < 3; ++seed) out.push_back(instance_to_json(gen_newsvendor(10, seed)));
    out.push_back(instance_to_json(gen_cvar(8, 5)));
    return out;
  };
  const auto first = generate();
  const auto second = generate();
  t.check(first == second, "generated instances differ");
  const std::string a = bench_csv(first);
  const std::string b = bench_csv(second);
  t.check(a == b, "bench CSV differs");
  t.check(std::count(a.begin(), a.end(), '\n') == 1 + 4 * 4, "unexpected row count");
  r.seconds = since(t0);
  r.passed = t.failures() == 0;
  r.detail = std::to_string(a.size()) + " CSV bytes compared; " + t.summary();
  return r;
}

}  // namespace

std::vector<CriterionResult> run_acceptance(const VerifyOptions& options) {
  std::vector<int> ids = options.criteria;
  if (ids.empty()) ids = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  std::sort(ids.begin(), ids.end());
  const auto wanted = [&](int id) { return std::binary_search(ids.begin(), ids.end(), id); };

  SolveAudit audit;
  set_solve_observer([&audit](const ConicProblem& p, const ConicSolution& s) { audit.observe(p, s); });
  std::vector<CriterionResult> out;
  const auto push = [&](CriterionResult r) {
    if (r.budget_seconds > 0 && r.seconds > r.budget_seconds) {
      r.passed = false;
      r.detail += "; over the runtime budget";
    }
    if (options.progress) *options.progress << format_result(r) << "\n";
    out.push_back(std::move(r));
  };
  try {
    std::optional<SandwichData> sandwich;
    const auto need_sandwich = [&]() -> const SandwichData& {
      if (!sandwich) sandwich = run_sandwich_suite(options.progress);
      return *sandwich;
    };
    if (wanted(1)) push(criterion_fixture_one());
    if (wanted(2)) push(criterion_fixture_two());
    if (wanted(3)) push(criterion_sandwich(need_sandwich()));
    if (wanted(4)) push(criterion_quality(options.progress));
    if (wanted(5)) push(criterion_constructions());
    if (wanted(6)) push(criterion_gap_bound(need_sandwich()));
    if (wanted(7)) push(criterion_dominance());
    if (wanted(8)) push(criterion_rank_equivalence());
    if (wanted(9)) {
      SolveAudit snapshot;
      {
        std::lock_guard<std::mutex> lock(audit.mutex);
        snapshot.optimal = audit.optimal;
        snapshot.violations = audit.violations;
        snapshot.first = audit.first;
      }
      push(criterion_conic(snapshot));
    }
    if (wanted(10)) push(criterion_determinism());
  } catch (...) {
    set_solve_observer({});
    throw;
  }
  set_solve_observer({});
  return out;
}

std::string format_result(const CriterionResult& r) {
  std::string out = std::string(r.passed ? "PASS" : "FAIL") + " [" + std::to_string(r.id) + "] " + r.title +
                    " (" + fmt(r.seconds, 3) + " s";
  if (r.budget_seconds > 0) out += " / " + fmt(r.budget_seconds, 3) + " s";
  return out + "): " + r.detail;
}

}  // namespace odr
