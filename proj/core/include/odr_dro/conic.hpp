#pragma once

#include <functional>
#include <limits>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Sparse>

#include "odr_dro/linalg.hpp"

namespace odr {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor>;
using Triplet = Eigen::Triplet<double>;

enum class ConeKind { kNonneg, kSecondOrder, kPsd };

// Nonneg(n): n scalars. SecondOrder(n): (t, v) with v of length n-1.
// Psd(n): n x n symmetric matrix stored as svec of length n(n+1)/2.
struct ConeBlock {
  ConeKind kind;
  int n;
  int dim() const;
  int degree() const;
};

struct ConeSpec {
  std::vector<ConeBlock> blocks;
  int dim() const;
  int degree() const;
};

struct VarSlice {
  int offset = 0;
  int size = 0;
};

// minimize c'x + offset  subject to  a_eq x = b_eq,  h - g x in cone.
// Every variable is free; cone membership is expressed through (g, h).
struct ConicProblem {
  Vector c;
  double objective_offset = 0.0;
  SparseMatrix a_eq;
  Vector b_eq;
  SparseMatrix g;
  Vector h;
  ConeSpec cone;
  std::map<std::string, VarSlice> var_map;

  int num_vars() const { return static_cast<int>(c.size()); }
  // Throws DimensionError on inconsistent sizes or overlapping slices.
  void check() const;
};

enum class SolveStatus {
  kOptimal,
  kPrimalInfeasible,
  kDualInfeasible,
  kIterLimit,
  kNumericalFailure,
  // The run stalled or hit the iteration cap; the returned point is the best
  // iterate and meets every tolerance scaled by SolverTolerances::near_factor.
  kNearOptimal,
};

const char* to_string(SolveStatus status);

struct SolverTolerances {
  double primal = 1e-8;
  double dual = 1e-8;
  double gap = 1e-8;
  int max_iter = 200;
  double regularization = 1e-9;
  double near_factor = 1e3;
  double time_limit = std::numeric_limits<double>::infinity();  // seconds, reported as kIterLimit
  std::ostream* log = nullptr;  // one line per iteration when set
};

// On kPrimalInfeasible, (y, z) hold a normalized Farkas certificate
// (h'z + b'y = -1). On kDualInfeasible, (x, s) hold an improving ray
// (c'x = -1).
struct ConicSolution {
  SolveStatus status = SolveStatus::kNumericalFailure;
  Vector x;
  Vector y;
  Vector z;
  Vector s;
  double objective = 0.0;
  double dual_objective = 0.0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double gap = 0.0;
  int iterations = 0;
  double wall_time = 0.0;

  bool optimal() const { return status == SolveStatus::kOptimal; }
  Vector var(const ConicProblem& problem, const std::string& name) const;
};

ConicSolution solve(const ConicProblem& problem,
                    const SolverTolerances& tol = SolverTolerances{});

// Process-wide callback run after every solve; an empty function clears it.
// It may be invoked concurrently from several threads.
using SolveObserver = std::function<void(const ConicProblem&, const ConicSolution&)>;
void set_solve_observer(SolveObserver observer);

// Largest of the equality residual (max norm) and the depth by which
// h - g x leaves the cone (negated smallest eigenvalue, or 0 inside).
double constraint_violation(const ConicProblem& problem, const Vector& x);

// Lower triangle, column by column, off-diagonals scaled by sqrt(2).
int svec_length(int n);
Vector svec(const Matrix& a);
Matrix smat(const Vector& v);

// Text dump: header line, then "c", "aeq", "beq", "g", "h" sections of
// 0-based triplets or index/value pairs, then one line per cone block.
void dump_problem(const ConicProblem& problem, std::ostream& out);

}  // namespace odr
