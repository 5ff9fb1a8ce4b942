#include "odr_dro/conic.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <memory>
#include <mutex>
#include <numbers>
#include <ostream>

#include "odr_dro/errors.hpp"

namespace odr {

int ConeBlock::dim() const {
  return kind == ConeKind::kPsd ? n * (n + 1) / 2 : n;
}

int ConeBlock::degree() const {
  return kind == ConeKind::kSecondOrder ? 1 : n;
}

int ConeSpec::dim() const {
  int d = 0;
  for (const auto& b : blocks) d += b.dim();
  return d;
}

int ConeSpec::degree() const {
  int d = 0;
  for (const auto& b : blocks) d += b.degree();
  return d;
}

const char* to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::kOptimal: return "optimal";
    case SolveStatus::kPrimalInfeasible: return "primal_infeasible";
    case SolveStatus::kDualInfeasible: return "dual_infeasible";
    case SolveStatus::kIterLimit: return "iteration_limit";
    case SolveStatus::kNumericalFailure: return "numerical_failure";
    case SolveStatus::kNearOptimal: return "near_optimal";
  }
  return "unknown";
}

void ConicProblem::check() const {
  const int n = num_vars();
  if (a_eq.cols() != n || g.cols() != n) {
    throw DimensionError("conic problem: column count differs from variable count");
  }
  if (a_eq.rows() != b_eq.size()) throw DimensionError("conic problem: a_eq/b_eq mismatch");
  if (g.rows() != h.size()) throw DimensionError("conic problem: g/h mismatch");
  if (cone.dim() != g.rows()) throw DimensionError("conic problem: cone dimension mismatch");
  for (const auto& b : cone.blocks) {
    if (b.n < 1) throw DimensionError("conic problem: empty cone block");
  }
  std::vector<std::pair<int, int>> ranges;
  for (const auto& [name, slice] : var_map) {
    if (slice.offset < 0 || slice.size < 0 || slice.offset + slice.size > n) {
      throw DimensionError("conic problem: slice out of range: " + name);
    }
    if (slice.size > 0) ranges.emplace_back(slice.offset, slice.offset + slice.size);
  }
  std::sort(ranges.begin(), ranges.end());
  for (size_t i = 1; i < ranges.size(); ++i) {
    if (ranges[i].first < ranges[i - 1].second) {
      throw DimensionError("conic problem: overlapping variable slices");
    }
  }
}

Vector ConicSolution::var(const ConicProblem& problem, const std::string& name) const {
  auto it = problem.var_map.find(name);
  if (it == problem.var_map.end()) throw InputError("unknown variable slice: " + name);
  return x.segment(it->second.offset, it->second.size);
}

int svec_length(int n) { return n * (n + 1) / 2; }

Vector svec(const Matrix& a) {
  const int n = static_cast<int>(a.rows());
  Vector v(svec_length(n));
  int k = 0;
  for (int j = 0; j < n; ++j) {
    for (int i = j; i < n; ++i) {
      v(k++) = i == j ? a(i, j) : std::numbers::sqrt2 * 0.5 * (a(i, j) + a(j, i));
    }
  }
  return v;
}

Matrix smat(const Vector& v) {
  const auto len = v.size();
  const int n = static_cast<int>(std::lround((std::sqrt(8.0 * len + 1.0) - 1.0) / 2.0));
  if (svec_length(n) != len) throw DimensionError("smat: length is not a triangular number");
  Matrix a(n, n);
  int k = 0;
  for (int j = 0; j < n; ++j) {
    for (int i = j; i < n; ++i) {
      if (i == j) {
        a(i, i) = v(k++);
      } else {
        a(i, j) = a(j, i) = v(k++) / std::numbers::sqrt2;
      }
    }
  }
  return a;
}

void dump_problem(const ConicProblem& p, std::ostream& out) {
  out.precision(17);
  out << "conic_problem vars " << p.num_vars() << " eq " << p.a_eq.rows() << " cone "
      << p.g.rows() << " offset " << p.objective_offset << "\n";
  out << "c\n";
  for (int i = 0; i < p.num_vars(); ++i) {
    if (p.c(i) != 0.0) out << i << " " << p.c(i) << "\n";
  }
  auto triplets = [&out](const SparseMatrix& m) {
    for (int k = 0; k < m.outerSize(); ++k) {
      for (SparseMatrix::InnerIterator it(m, k); it; ++it) {
        out << it.row() << " " << it.col() << " " << it.value() << "\n";
      }
    }
  };
  auto dense = [&out](const Vector& v) {
    for (int i = 0; i < v.size(); ++i) {
      if (v(i) != 0.0) out << i << " " << v(i) << "\n";
    }
  };
  out << "aeq\n";
  triplets(p.a_eq);
  out << "beq\n";
  dense(p.b_eq);
  out << "g\n";
  triplets(p.g);
  out << "h\n";
  dense(p.h);
  out << "cones\n";
  for (const auto& b : p.cone.blocks) {
    switch (b.kind) {
      case ConeKind::kNonneg: out << "nonneg " << b.n << "\n"; break;
      case ConeKind::kSecondOrder: out << "soc " << b.n << "\n"; break;
      case ConeKind::kPsd: out << "psd " << b.n << "\n"; break;
    }
  }
  out << "end\n";
}

namespace {

using Clock = std::chrono::steady_clock;
using Entries = std::vector<std::pair<int, double>>;

// Static per-block structure extracted from g once per solve.
struct Block {
  ConeKind kind;
  int n = 0;
  int offset = 0;
  int dim = 0;
  std::vector<int> cols;             // global variables touching the block
  std::vector<Entries> row_entries;  // nonneg: per row, (local col, value)
  Matrix dense;                      // second-order: dim x cols
  std::vector<Entries> col_entries;  // psd: per local col, (svec index, value)
  std::vector<int> sr, sc;           // psd: svec index -> (row, col)
};

// Nesterov-Todd scaling of one block at (s, z).
struct BlockScaling {
  Vector w;         // nonneg: sqrt(s / z)
  double beta = 1;  // second-order: W = beta * boost(wbar)
  Vector wbar;
  Matrix r, rinv;   // psd: W(Z) = R' Z R
  Matrix sw;        // psd: (R R')^{-1}
  Vector lam_diag;  // psd: scaled point, diagonal
  Vector lambda;    // scaled point in block coordinates
};

// u'Ju in factored form to avoid cancellation near the boundary.
double jnorm_sq(const Vector& u) {
  const double t = u.tail(u.size() - 1).norm();
  return (u(0) - t) * (u(0) + t);
}

// Hyperbolic rotation with first row (w0, w1'); maps J w to e when
// w'Jw = 1.
Vector boost(const Vector& w, const Vector& v) {
  const auto m = w.size() - 1;
  const double w1v1 = w.tail(m).dot(v.tail(m));
  Vector out(v.size());
  out(0) = w(0) * v(0) + w1v1;
  out.tail(m) = v.tail(m) + (v(0) + w1v1 / (1.0 + w(0))) * w.tail(m);
  return out;
}

Vector jflip(const Vector& v) {
  Vector out = -v;
  out(0) = v(0);
  return out;
}

Vector identity_element(const Block& b) {
  switch (b.kind) {
    case ConeKind::kNonneg: return Vector::Ones(b.dim);
    case ConeKind::kSecondOrder: return Vector::Unit(b.dim, 0);
    case ConeKind::kPsd: return svec(Matrix::Identity(b.n, b.n));
  }
  return {};
}

double min_jordan_eig(const Block& b, const Vector& v) {
  switch (b.kind) {
    case ConeKind::kNonneg: return v.minCoeff();
    case ConeKind::kSecondOrder: return v(0) - v.tail(b.dim - 1).norm();
    case ConeKind::kPsd: return min_eigenvalue(smat(v));
  }
  return 0.0;
}

Vector jordan_product(const Block& b, const Vector& u, const Vector& v) {
  switch (b.kind) {
    case ConeKind::kNonneg: return u.cwiseProduct(v);
    case ConeKind::kSecondOrder: {
      Vector out(b.dim);
      out(0) = u.dot(v);
      out.tail(b.dim - 1) = u(0) * v.tail(b.dim - 1) + v(0) * u.tail(b.dim - 1);
      return out;
    }
    case ConeKind::kPsd: {
      const Matrix um = smat(u), vm = smat(v);
      return svec(0.5 * (um * vm + vm * um));
    }
  }
  return {};
}

// Solves lambda o u = d for u, lambda being the scaled point of the block.
Vector jordan_divide(const Block& b, const BlockScaling& sc, const Vector& d) {
  const Vector& lam = sc.lambda;
  switch (b.kind) {
    case ConeKind::kNonneg: return d.cwiseQuotient(lam);
    case ConeKind::kSecondOrder: {
      const auto m = b.dim - 1;
      const double l0 = lam(0);
      const double det = jnorm_sq(lam);
      Vector u(b.dim);
      u(0) = (l0 * d(0) - lam.tail(m).dot(d.tail(m))) / det;
      u.tail(m) = (d.tail(m) - u(0) * lam.tail(m)) / l0;
      return u;
    }
    case ConeKind::kPsd: {
      Matrix dm = smat(d);
      for (int j = 0; j < b.n; ++j) {
        for (int i = 0; i < b.n; ++i) {
          dm(i, j) *= 2.0 / (sc.lam_diag(i) + sc.lam_diag(j));
        }
      }
      return svec(dm);
    }
  }
  return {};
}

// Largest alpha with lambda + alpha d in the cone (infinity if unbounded).
double max_step(const Block& b, const BlockScaling& sc, const Vector& d) {
  const double inf = std::numeric_limits<double>::infinity();
  switch (b.kind) {
    case ConeKind::kNonneg: {
      double a = inf;
      for (int i = 0; i < b.dim; ++i) {
        if (d(i) < 0) a = std::min(a, -sc.lambda(i) / d(i));
      }
      return a;
    }
    case ConeKind::kSecondOrder: {
      const double nx = std::sqrt(std::max(jnorm_sq(sc.lambda), 1e-300));
      const Vector xbar = sc.lambda / nx;
      const Vector dt = boost(jflip(xbar), d) / nx;
      const double e = dt(0) - dt.tail(b.dim - 1).norm();
      return e >= 0 ? inf : -1.0 / e;
    }
    case ConeKind::kPsd: {
      const Vector isq = sc.lam_diag.cwiseSqrt().cwiseInverse();
      const Matrix m = isq.asDiagonal() * smat(d) * isq.asDiagonal();
      const double e = min_eigenvalue(m);
      return e >= 0 ? inf : -1.0 / e;
    }
  }
  return inf;
}

enum class WOp { kW, kWT, kWinv, kWinvT };

Vector apply_w(const Block& b, const BlockScaling& sc, const Vector& v, WOp op) {
  switch (b.kind) {
    case ConeKind::kNonneg:
      return (op == WOp::kW || op == WOp::kWT) ? Vector(sc.w.cwiseProduct(v))
                                               : Vector(v.cwiseQuotient(sc.w));
    case ConeKind::kSecondOrder:
      return (op == WOp::kW || op == WOp::kWT) ? Vector(sc.beta * boost(sc.wbar, v))
                                               : Vector(boost(jflip(sc.wbar), v) / sc.beta);
    case ConeKind::kPsd: {
      const Matrix vm = smat(v);
      switch (op) {
        case WOp::kW: return svec(sc.r.transpose() * vm * sc.r);
        case WOp::kWT: return svec(sc.r * vm * sc.r.transpose());
        case WOp::kWinv: return svec(sc.rinv.transpose() * vm * sc.rinv);
        case WOp::kWinvT: return svec(sc.rinv * vm * sc.rinv.transpose());
      }
    }
  }
  return {};
}

class Cones {
 public:
  Cones(const ConeSpec& spec, const SparseMatrix& g) {
    int offset = 0;
    std::vector<int> row_block(g.rows());
    for (const auto& cb : spec.blocks) {
      Block b;
      b.kind = cb.kind;
      b.n = cb.n;
      b.offset = offset;
      b.dim = cb.dim();
      for (int r = 0; r < b.dim; ++r) row_block[offset + r] = static_cast<int>(blocks_.size());
      offset += b.dim;
      blocks_.push_back(std::move(b));
    }
    degree_ = spec.degree();
    dim_ = offset;

    std::vector<std::vector<std::pair<int, std::pair<int, double>>>> per_block(blocks_.size());
    for (int j = 0; j < g.outerSize(); ++j) {
      for (SparseMatrix::InnerIterator it(g, j); it; ++it) {
        if (it.value() == 0.0) continue;
        const int bi = row_block[it.row()];
        per_block[bi].push_back({j, {static_cast<int>(it.row()) - blocks_[bi].offset, it.value()}});
      }
    }
    for (size_t bi = 0; bi < blocks_.size(); ++bi) {
      Block& b = blocks_[bi];
      std::vector<int> local(g.cols(), -1);
      for (const auto& e : per_block[bi]) {
        if (local[e.first] < 0) {
          local[e.first] = static_cast<int>(b.cols.size());
          b.cols.push_back(e.first);
        }
      }
      const int nc = static_cast<int>(b.cols.size());
      switch (b.kind) {
        case ConeKind::kNonneg:
          b.row_entries.resize(b.dim);
          for (const auto& e : per_block[bi]) {
            b.row_entries[e.second.first].push_back({local[e.first], e.second.second});
          }
          break;
        case ConeKind::kSecondOrder:
          b.dense = Matrix::Zero(b.dim, nc);
          for (const auto& e : per_block[bi]) {
            b.dense(e.second.first, local[e.first]) += e.second.second;
          }
          break;
        case ConeKind::kPsd:
          b.col_entries.resize(nc);
          for (const auto& e : per_block[bi]) {
            b.col_entries[local[e.first]].push_back(e.second);
          }
          for (int j = 0; j < b.n; ++j) {
            for (int i = j; i < b.n; ++i) {
              b.sr.push_back(i);
              b.sc.push_back(j);
            }
          }
          break;
      }
    }
  }

  const std::vector<Block>& blocks() const { return blocks_; }
  int degree() const { return degree_; }
  int dim() const { return dim_; }

  Vector identity() const {
    Vector e(dim_);
    for (const auto& b : blocks_) e.segment(b.offset, b.dim) = identity_element(b);
    return e;
  }

  // Smallest Jordan eigenvalue over all blocks.
  double min_eig(const Vector& v) const {
    double m = std::numeric_limits<double>::infinity();
    for (const auto& b : blocks_) m = std::min(m, min_jordan_eig(b, v.segment(b.offset, b.dim)));
    return m;
  }

  std::vector<BlockScaling> identity_scaling() const {
    std::vector<BlockScaling> out(blocks_.size());
    for (size_t i = 0; i < blocks_.size(); ++i) {
      const Block& b = blocks_[i];
      BlockScaling& sc = out[i];
      switch (b.kind) {
        case ConeKind::kNonneg: sc.w = Vector::Ones(b.dim); break;
        case ConeKind::kSecondOrder:
          sc.beta = 1.0;
          sc.wbar = Vector::Unit(b.dim, 0);
          break;
        case ConeKind::kPsd:
          sc.r = sc.rinv = sc.sw = Matrix::Identity(b.n, b.n);
          sc.lam_diag = Vector::Ones(b.n);
          break;
      }
      sc.lambda = identity_element(b);
    }
    return out;
  }

  // Returns false when a block is numerically on the boundary.
  bool nt_scaling(const Vector& s, const Vector& z, std::vector<BlockScaling>& out) const {
    out.assign(blocks_.size(), BlockScaling{});
    for (size_t i = 0; i < blocks_.size(); ++i) {
      const Block& b = blocks_[i];
      const Vector sb = s.segment(b.offset, b.dim);
      const Vector zb = z.segment(b.offset, b.dim);
      BlockScaling& sc = out[i];
      switch (b.kind) {
        case ConeKind::kNonneg:
          if ((sb.array() <= 0).any() || (zb.array() <= 0).any()) return false;
          sc.w = sb.cwiseQuotient(zb).cwiseSqrt();
          sc.lambda = sb.cwiseProduct(zb).cwiseSqrt();
          break;
        case ConeKind::kSecondOrder: {
          const double ss = jnorm_sq(sb), zz = jnorm_sq(zb);
          if (!(ss > 0) || !(zz > 0) || sb(0) <= 0 || zb(0) <= 0) return false;
          const double sn = std::sqrt(ss), zn = std::sqrt(zz);
          const Vector sbar = sb / sn, zbar = zb / zn;
          const double gamma = std::sqrt(0.5 * (1.0 + zbar.dot(sbar)));
          sc.wbar = (sbar + jflip(zbar)) / (2.0 * gamma);
          sc.beta = std::sqrt(sn / zn);
          sc.lambda = sc.beta * boost(sc.wbar, zb);
          break;
        }
        case ConeKind::kPsd: {
          Eigen::LLT<Matrix> ls(smat(sb)), lz(smat(zb));
          if (ls.info() != Eigen::Success || lz.info() != Eigen::Success) return false;
          const Matrix lsm = ls.matrixL(), lzm = lz.matrixL();
          Eigen::JacobiSVD<Matrix> sv(lzm.transpose() * lsm, Eigen::ComputeFullU | Eigen::ComputeFullV);
          const Vector lam = sv.singularValues();
          if (!(lam.minCoeff() > 0)) return false;
          const Vector isq = lam.cwiseSqrt().cwiseInverse();
          sc.r = lsm * sv.matrixV() * isq.asDiagonal();
          const Matrix lsinv = lsm.triangularView<Eigen::Lower>().solve(Matrix::Identity(b.n, b.n));
          sc.rinv = lam.cwiseSqrt().asDiagonal() * sv.matrixV().transpose() * lsinv;
          sc.sw = sc.rinv.transpose() * sc.rinv;
          sc.lam_diag = lam;
          sc.lambda = svec(Matrix(lam.asDiagonal()));
          break;
        }
      }
    }
    return true;
  }

  Vector apply(const std::vector<BlockScaling>& sc, const Vector& v, WOp op) const {
    Vector out(dim_);
    for (size_t i = 0; i < blocks_.size(); ++i) {
      const Block& b = blocks_[i];
      out.segment(b.offset, b.dim) = apply_w(b, sc[i], v.segment(b.offset, b.dim), op);
    }
    return out;
  }

  // (W'W)^{-1} v
  Vector apply_inv_ww(const std::vector<BlockScaling>& sc, const Vector& v) const {
    return apply(sc, apply(sc, v, WOp::kWinvT), WOp::kWinv);
  }

  Vector apply_ww(const std::vector<BlockScaling>& sc, const Vector& v) const {
    return apply(sc, apply(sc, v, WOp::kW), WOp::kWT);
  }

  Vector lambda(const std::vector<BlockScaling>& sc) const {
    Vector out(dim_);
    for (size_t i = 0; i < blocks_.size(); ++i) {
      out.segment(blocks_[i].offset, blocks_[i].dim) = sc[i].lambda;
    }
    return out;
  }

  Vector product(const Vector& u, const Vector& v) const {
    Vector out(dim_);
    for (const auto& b : blocks_) {
      out.segment(b.offset, b.dim) =
          jordan_product(b, u.segment(b.offset, b.dim), v.segment(b.offset, b.dim));
    }
    return out;
  }

  Vector divide(const std::vector<BlockScaling>& sc, const Vector& d) const {
    Vector out(dim_);
    for (size_t i = 0; i < blocks_.size(); ++i) {
      const Block& b = blocks_[i];
      out.segment(b.offset, b.dim) = jordan_divide(b, sc[i], d.segment(b.offset, b.dim));
    }
    return out;
  }

  double step(const std::vector<BlockScaling>& sc, const Vector& d) const {
    double a = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < blocks_.size(); ++i) {
      const Block& b = blocks_[i];
      a = std::min(a, max_step(b, sc[i], d.segment(b.offset, b.dim)));
    }
    return a;
  }

  // H = G' (W'W)^{-1} G, dense.
  void accumulate_h(const std::vector<BlockScaling>& scs, Matrix& h) const {
    for (size_t bi = 0; bi < blocks_.size(); ++bi) {
      const Block& b = blocks_[bi];
      const BlockScaling& sc = scs[bi];
      switch (b.kind) {
        case ConeKind::kNonneg:
          for (int r = 0; r < b.dim; ++r) {
            const double d = 1.0 / (sc.w(r) * sc.w(r));
            for (const auto& [ci, vi] : b.row_entries[r]) {
              for (const auto& [cj, vj] : b.row_entries[r]) {
                h(b.cols[ci], b.cols[cj]) += d * vi * vj;
              }
            }
          }
          break;
        case ConeKind::kSecondOrder: {
          Matrix x(b.dim, b.cols.size());
          const Vector jw = jflip(sc.wbar);
          for (int j = 0; j < x.cols(); ++j) x.col(j) = boost(jw, b.dense.col(j)) / sc.beta;
          const Matrix hb = x.transpose() * x;
          for (int j = 0; j < hb.cols(); ++j) {
            for (int i = 0; i < hb.rows(); ++i) h(b.cols[i], b.cols[j]) += hb(i, j);
          }
          break;
        }
        case ConeKind::kPsd: {
          const Matrix& sw = sc.sw;
          Matrix t(b.n, b.n);
          const int nc = static_cast<int>(b.cols.size());
          for (int j = 0; j < nc; ++j) {
            t.setZero();
            for (const auto& [k, v] : b.col_entries[j]) {
              const int r = b.sr[k], c = b.sc[k];
              if (r == c) {
                t.noalias() += v * sw.col(r) * sw.col(r).transpose();
              } else {
                const double a = v / std::numbers::sqrt2;
                t.noalias() += a * sw.col(r) * sw.col(c).transpose();
                t.noalias() += a * sw.col(c) * sw.col(r).transpose();
              }
            }
            for (int i = 0; i < nc; ++i) {
              double acc = 0.0;
              for (const auto& [k, v] : b.col_entries[i]) {
                const int r = b.sr[k], c = b.sc[k];
                acc += v * (r == c ? t(r, r) : std::numbers::sqrt2 * t(r, c));
              }
              h(b.cols[i], b.cols[j]) += acc;
            }
          }
          break;
        }
      }
    }
  }

 private:
  std::vector<Block> blocks_;
  int degree_ = 0;
  int dim_ = 0;
};

// Factorization of the reduced KKT system for one scaling.
class KktSolver {
 public:
  KktSolver(const SparseMatrix& a, const SparseMatrix& g, const Cones& cones, double reg)
      : a_(a), g_(g), cones_(cones), reg_(reg) {}

  bool factor(const std::vector<BlockScaling>& sc) {
    sc_ = &sc;
    const int n = static_cast<int>(g_.cols());
    Matrix m = Matrix::Zero(n, n);
    cones_.accumulate_h(sc, m);
    if (a_.rows() > 0) m += Matrix(a_.transpose() * a_);
    m = symmetrize(m);
    const double scale = std::max(1.0, m.diagonal().cwiseAbs().maxCoeff());
    // Smallest diagonal shift that factors; refinement in solve() removes it.
    for (double shift = reg_ * 1e-5; shift <= reg_ * 10.0; shift *= 100.0) {
      Matrix shifted = m;
      shifted.diagonal().array() += shift * scale;
      llt_.compute(shifted);
      if (llt_.info() != Eigen::Success) continue;
      if (a_.rows() == 0) return true;
      v2_ = llt_.solve(Matrix(a_.transpose()));
      Matrix schur = symmetrize(a_ * v2_);
      const double sscale = std::max(1.0, schur.diagonal().cwiseAbs().maxCoeff());
      schur.diagonal().array() += shift * sscale;
      schur_.compute(schur);
      if (schur_.info() == Eigen::Success) return true;
    }
    return false;
  }

  // Solves [0 A' G'; A 0 0; G 0 -W'W] (ux, uy, uz) = (bx, by, bz).
  void solve(const Vector& bx, const Vector& by, const Vector& bz, Vector& ux, Vector& uy,
             Vector& uz) const {
    solve_once(bx, by, bz, ux, uy, uz);
    auto residual = [&](Vector& rx, Vector& ry, Vector& rz) {
      rx = bx - a_.transpose() * uy - g_.transpose() * uz;
      ry = by - a_ * ux;
      rz = bz - (g_ * ux - cones_.apply_ww(*sc_, uz));
      return std::sqrt(rx.squaredNorm() + ry.squaredNorm() + rz.squaredNorm());
    };
    Vector rx, ry, rz;
    double err = residual(rx, ry, rz);
    const double target = 1e-14 * (1.0 + std::sqrt(bx.squaredNorm() + by.squaredNorm() + bz.squaredNorm()));
    for (int pass = 0; pass < 10 && err > target; ++pass) {
      Vector dx, dy, dz;
      solve_once(rx, ry, rz, dx, dy, dz);
      const Vector px = ux, py = uy, pz = uz;
      ux += dx;
      uy += dy;
      uz += dz;
      const double next = residual(rx, ry, rz);
      if (!(next < 0.9 * err)) {
        if (!(next < err)) {
          ux = px;
          uy = py;
          uz = pz;
        }
        break;
      }
      err = next;
    }
  }

 private:
  void solve_once(const Vector& bx, const Vector& by, const Vector& bz, Vector& ux, Vector& uy,
                  Vector& uz) const {
    const Vector t = cones_.apply_inv_ww(*sc_, bz);
    Vector rhs = bx + g_.transpose() * t;
    if (a_.rows() > 0) rhs += a_.transpose() * by;
    const Vector v1 = llt_.solve(rhs);
    if (a_.rows() > 0) {
      uy = schur_.solve(a_ * v1 - by);
      ux = v1 - v2_ * uy;
    } else {
      uy = Vector(0);
      ux = v1;
    }
    uz = cones_.apply_inv_ww(*sc_, g_ * ux - bz);
  }

  const SparseMatrix& a_;
  const SparseMatrix& g_;
  const Cones& cones_;
  double reg_;
  const std::vector<BlockScaling>* sc_ = nullptr;
  Eigen::LLT<Matrix> llt_;
  Eigen::LLT<Matrix> schur_;
  Matrix v2_;
};

struct EqualityPresolve {
  SparseMatrix a;
  Vector b;
  std::vector<int> kept;
  bool consistent = true;
  Vector certificate;  // over original rows when inconsistent
};

// Drops linearly dependent equality rows; flags inconsistent systems.
EqualityPresolve presolve_equalities(const SparseMatrix& a, const Vector& b) {
  EqualityPresolve out;
  const int p = static_cast<int>(a.rows());
  if (p == 0) {
    out.a = a;
    out.b = b;
    return out;
  }
  const Matrix at = Matrix(a.transpose());
  Eigen::ColPivHouseholderQR<Matrix> qr(at);
  qr.setThreshold(1e-10);
  const int rank = static_cast<int>(qr.rank());
  if (rank == p) {
    out.a = a;
    out.b = b;
    for (int i = 0; i < p; ++i) out.kept.push_back(i);
    return out;
  }
  for (int i = 0; i < rank; ++i) out.kept.push_back(qr.colsPermutation().indices()(i));
  std::sort(out.kept.begin(), out.kept.end());
  Matrix ak(at.rows(), rank);
  Vector bk(rank);
  for (int i = 0; i < rank; ++i) {
    ak.col(i) = at.col(out.kept[i]);
    bk(i) = b(out.kept[i]);
  }
  Eigen::ColPivHouseholderQR<Matrix> kqr(ak);
  const double bscale = std::max(1.0, b.cwiseAbs().maxCoeff());
  std::vector<bool> is_kept(p, false);
  for (int i : out.kept) is_kept[i] = true;
  for (int i = 0; i < p; ++i) {
    if (is_kept[i]) continue;
    const Vector alpha = kqr.solve(Vector(at.col(i)));
    const double mismatch = b(i) - alpha.dot(bk);
    if (std::abs(mismatch) > 1e-8 * bscale) {
      // y = e_i - sum alpha_k e_k gives A'y = 0 and b'y = mismatch.
      Vector y = Vector::Zero(p);
      y(i) = 1.0;
      for (int k = 0; k < rank; ++k) y(out.kept[k]) -= alpha(k);
      out.consistent = false;
      out.certificate = -y / mismatch;
      return out;
    }
  }
  std::vector<Triplet> trips;
  std::vector<int> new_row(p, -1);
  for (int i = 0; i < rank; ++i) new_row[out.kept[i]] = i;
  for (int k = 0; k < a.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(a, k); it; ++it) {
      if (new_row[it.row()] >= 0) trips.emplace_back(new_row[it.row()], it.col(), it.value());
    }
  }
  out.a.resize(rank, a.cols());
  out.a.setFromTriplets(trips.begin(), trips.end());
  out.b = bk;
  return out;
}

std::mutex observer_mutex;
std::shared_ptr<const SolveObserver> observer;

ConicSolution solve_impl(const ConicProblem& problem, const SolverTolerances& tol) {
  const auto start = Clock::now();
  problem.check();
  ConicSolution sol;
  const int n = problem.num_vars();
  const int p_all = static_cast<int>(problem.a_eq.rows());
  const auto finish = [&](SolveStatus status) {
    sol.status = status;
    sol.wall_time = std::chrono::duration<double>(Clock::now() - start).count();
    return sol;
  };

  EqualityPresolve eq = presolve_equalities(problem.a_eq, problem.b_eq);
  if (!eq.consistent) {
    sol.x = Vector::Zero(n);
    sol.s = Vector::Zero(problem.g.rows());
    sol.z = Vector::Zero(problem.g.rows());
    sol.y = eq.certificate;
    return finish(SolveStatus::kPrimalInfeasible);
  }
  const SparseMatrix& a = eq.a;
  const Vector& b = eq.b;
  const SparseMatrix& g = problem.g;
  const Vector& h = problem.h;
  const Vector& c = problem.c;
  const int p = static_cast<int>(a.rows());

  Cones cones(problem.cone, g);
  const int mc = cones.dim();
  KktSolver kkt(a, g, cones, tol.regularization);

  auto expand_y = [&](const Vector& y) {
    Vector full = Vector::Zero(p_all);
    for (int i = 0; i < p; ++i) full(eq.kept[i]) = y(i);
    return full;
  };

  // Starting point from two least-squares problems with identity scaling.
  std::vector<BlockScaling> scaling = cones.identity_scaling();
  if (!kkt.factor(scaling)) {
    sol.x = Vector::Zero(n);
    return finish(SolveStatus::kNumericalFailure);
  }
  Vector x, y, z, s, tmp_y, tmp_z;
  kkt.solve(Vector::Zero(n), b, h, x, tmp_y, tmp_z);
  s = -tmp_z;
  Vector tmp_x;
  kkt.solve(-c, Vector::Zero(p), Vector::Zero(mc), tmp_x, y, z);
  const Vector e = cones.identity();
  if (mc > 0) {
    const double ap = -cones.min_eig(s);
    if (ap >= -1e-8 * std::max(1.0, s.norm())) s += (1.0 + ap) * e;
    const double ad = -cones.min_eig(z);
    if (ad >= -1e-8 * std::max(1.0, z.norm())) z += (1.0 + ad) * e;
  }
  double tau = 1.0, kappa = 1.0;

  const double resx0 = std::max(1.0, c.norm());
  const double resy0 = std::max(1.0, b.norm());
  const double resz0 = std::max(1.0, h.norm());
  const int degree = cones.degree();

  auto store = [&](double scale_xs, double scale_yz) {
    sol.x = x * scale_xs;
    sol.s = s * scale_xs;
    sol.y = expand_y(y * scale_yz);
    sol.z = z * scale_yz;
  };

  // Best iterate by worst tolerance ratio, returned when the run stalls.
  ConicSolution best;
  double best_score = std::numeric_limits<double>::infinity();
  int best_iter = 0;
  const auto stalled = [&](SolveStatus status) {
    if (best_score <= tol.near_factor) {
      best.iterations = sol.iterations;
      sol = best;
      return finish(SolveStatus::kNearOptimal);
    }
    store(1.0 / tau, 1.0 / tau);
    return finish(status);
  };

  for (int iter = 0;; ++iter) {
    const Vector hrx = -(a.transpose() * y) - g.transpose() * z;
    const Vector hry = a * x;
    const Vector hrz = s + g * x;
    const Vector rx = hrx - c * tau;
    const Vector ry = hry - b * tau;
    const Vector rz = hrz - h * tau;
    const double cx = c.dot(x), by = b.dot(y), hz = h.dot(z);
    const double rt = kappa + cx + by + hz;
    const double sz = s.dot(z);
    const double mu = (sz + tau * kappa) / (degree + 1);
    const double pcost = cx / tau, dcost = -(hz + by) / tau;
    const double pres = std::max(ry.norm() / resy0, rz.norm() / resz0) / tau;
    const double dres = rx.norm() / resx0 / tau;
    const double relgap = std::max(sz / (tau * tau), std::abs(pcost - dcost)) /
                          (1.0 + std::min(std::abs(pcost), std::abs(dcost)));

    sol.iterations = iter;
    sol.primal_residual = pres;
    sol.dual_residual = dres;
    sol.gap = relgap;
    sol.objective = pcost + problem.objective_offset;
    sol.dual_objective = dcost + problem.objective_offset;
    if (tol.log != nullptr) {
      *tol.log << iter << " pcost " << pcost << " dcost " << dcost << " pres " << pres << " dres "
               << dres << " gap " << relgap << " tau " << tau << " kappa " << kappa << '\n';
    }

    if (pres <= tol.primal && dres <= tol.dual && relgap <= tol.gap) {
      store(1.0 / tau, 1.0 / tau);
      return finish(SolveStatus::kOptimal);
    }
    const double score = std::max({pres / tol.primal, dres / tol.dual, relgap / tol.gap});
    if (score < best_score) {
      best_score = score;
      best = sol;
      best.x = x / tau;
      best.s = s / tau;
      best.y = expand_y(y / tau);
      best.z = z / tau;
      best_iter = iter;
    }
    if (best_score <= tol.near_factor && iter - best_iter >= 10) {
      return stalled(SolveStatus::kNumericalFailure);
    }
    if (hz + by < 0) {
      const double pinf = hrx.norm() / resx0 / (-(hz + by));
      if (pinf <= tol.dual) {
        store(0.0, 1.0 / (-(hz + by)));
        return finish(SolveStatus::kPrimalInfeasible);
      }
    }
    if (cx < 0) {
      const double dinf = std::max(hry.norm() / resy0, hrz.norm() / resz0) / (-cx);
      if (dinf <= tol.primal) {
        store(1.0 / (-cx), 0.0);
        return finish(SolveStatus::kDualInfeasible);
      }
    }
    if (iter >= tol.max_iter ||
        std::chrono::duration<double>(Clock::now() - start).count() > tol.time_limit) {
      return stalled(SolveStatus::kIterLimit);
    }

    if (!cones.nt_scaling(s, z, scaling) || !kkt.factor(scaling)) {
      return stalled(SolveStatus::kNumericalFailure);
    }
    const Vector lam = cones.lambda(scaling);
    const Vector lamsq = cones.product(lam, lam);

    Vector x1, y1, z1;
    kkt.solve(-c, b, h, x1, y1, z1);
    const double denom = -(cones.apply(scaling, z1, WOp::kW).squaredNorm() + kappa / tau);

    Vector dx, dy, dz, ds_scaled, dz_scaled;
    double dtau = 0, dkappa = 0;
    auto direction = [&](double res_factor, const Vector& d_s, double d_kappa) {
      const Vector d_x = res_factor * rx;
      const Vector d_y = res_factor * ry;
      const Vector d_z = -res_factor * rz;
      const double d_tau = -res_factor * rt;
      Vector x0, y0, z0;
      kkt.solve(d_x, -d_y, d_z - cones.apply(scaling, cones.divide(scaling, d_s), WOp::kWT), x0, y0,
                z0);
      dtau = (d_tau - d_kappa / tau - c.dot(x0) - b.dot(y0) - h.dot(z0)) / denom;
      dx = x0 + dtau * x1;
      dy = y0 + dtau * y1;
      dz = z0 + dtau * z1;
      dz_scaled = cones.apply(scaling, dz, WOp::kW);
      ds_scaled = cones.divide(scaling, d_s) - dz_scaled;
      dkappa = (d_kappa - kappa * dtau) / tau;
      double alpha = std::min(cones.step(scaling, ds_scaled), cones.step(scaling, dz_scaled));
      if (dtau < 0) alpha = std::min(alpha, -tau / dtau);
      if (dkappa < 0) alpha = std::min(alpha, -kappa / dkappa);
      return alpha;
    };

    // Predictor.
    const double alpha_aff = direction(1.0, -lamsq, -tau * kappa);
    const double sigma = std::pow(1.0 - std::min(1.0, alpha_aff), 3);
    // Corrector with the second-order term from the predictor.
    const Vector corr = cones.product(ds_scaled, dz_scaled);
    const double corr_k = dtau * dkappa;
    const Vector d_s = -lamsq - corr + sigma * mu * e;
    const double alpha = direction(1.0 - sigma, d_s, -tau * kappa - corr_k + sigma * mu);
    const double step = std::min(1.0, 0.99 * alpha);
    if (!(step > 1e-12)) return stalled(SolveStatus::kNumericalFailure);
    x += step * dx;
    y += step * dy;
    z += step * dz;
    s += step * cones.apply(scaling, ds_scaled, WOp::kWT);
    tau += step * dtau;
    kappa += step * dkappa;
  }
}

}  // namespace

ConicSolution solve(const ConicProblem& problem, const SolverTolerances& tol) {
  ConicSolution sol = solve_impl(problem, tol);
  std::shared_ptr<const SolveObserver> current;
  {
    std::lock_guard<std::mutex> lock(observer_mutex);
    current = observer;
  }
  if (current && *current) (*current)(problem, sol);
  return sol;
}

void set_solve_observer(SolveObserver fn) {
  std::lock_guard<std::mutex> lock(observer_mutex);
  observer = fn ? std::make_shared<const SolveObserver>(std::move(fn)) : nullptr;
}

double constraint_violation(const ConicProblem& problem, const Vector& x) {
  if (x.size() != problem.num_vars()) throw DimensionError("constraint_violation: wrong length");
  double worst = 0.0;
  if (problem.a_eq.rows() > 0) {
    worst = (problem.a_eq * x - problem.b_eq).cwiseAbs().maxCoeff();
  }
  const Vector slack = problem.h - problem.g * x;
  int off = 0;
  for (const ConeBlock& block : problem.cone.blocks) {
    const int d = block.dim();
    double lowest = 0.0;
    switch (block.kind) {
      case ConeKind::kNonneg:
        lowest = d > 0 ? slack.segment(off, d).minCoeff() : 0.0;
        break;
      case ConeKind::kSecondOrder:
        lowest = slack(off) - slack.segment(off + 1, d - 1).norm();
        break;
      case ConeKind::kPsd:
        lowest = min_eigenvalue(smat(slack.segment(off, d)));
        break;
    }
    worst = std::max(worst, -lowest);
    off += d;
  }
  return worst;
}

}  // namespace odr
