#include "odr_dro/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <iomanip>
#include <istream>
#include <map>
#include <sstream>
#include <thread>

#include "odr_dro/reformulations.hpp"

namespace odr {
namespace {

using Clock = std::chrono::steady_clock;

struct MethodLabel {
  Method method;
  const char* label;
};

constexpr MethodLabel kLabels[] = {
    {Method::kFull, "full"},       {Method::kPcaLb, "pca-lb"}, {Method::kPcaUb, "pca-ub"},
    {Method::kOdrLb, "odr-lb"},    {Method::kOdrUb, "odr-ub"}, {Method::kOdrRlb, "odr-rlb"},
    {Method::kHeuristicB, "heuristic-b"},
};

double elapsed(Clock::time_point since) {
  return std::chrono::duration<double>(Clock::now() - since).count();
}

void fill_from_certificate(BoundReport& out, const BoundValue& v, bool upper) {
  out.status = to_string(v.status);
  out.iterations = v.solution.iterations;
  if (v.certified()) {
    out.value = v.value;
    out.certified = true;
  } else if (upper && v.status == SolveStatus::kPrimalInfeasible) {
    out.value = std::numeric_limits<double>::infinity();
    out.certified = true;
  }
}

void fill_from_admm(BoundReport& out, const AdmmReport& r, bool certifies) {
  out.iterations = r.iterations;
  out.status = r.converged ? "converged" : (r.abort_reason.empty() ? "iteration_limit" : r.abort_reason);
  if (r.certified) {
    out.value = r.certified_bound;
    out.certified = certifies;
  }
}

std::string format_number(std::optional<double> v, int precision, bool fixed) {
  if (!v) return "-";
  if (std::isinf(*v)) return *v > 0 ? "inf" : "-inf";
  if (std::isnan(*v)) return "-";
  char buf[64];
  std::snprintf(buf, sizeof buf, fixed ? "%.*f" : "%.*g", precision, *v);
  std::string out = buf;
  if (out.front() == '-' && out.find_first_not_of("-0.") == std::string::npos) out.erase(0, 1);
  return out;
}

std::optional<double> parse_number(const std::string& cell) {
  if (cell == "-") return std::nullopt;
  if (cell == "inf") return std::numeric_limits<double>::infinity();
  if (cell == "-inf") return -std::numeric_limits<double>::infinity();
  char* end = nullptr;
  const double v = std::strtod(cell.c_str(), &end);
  if (cell.empty() || end != cell.c_str() + cell.size()) {
    throw InputError("csv: not a number: '" + cell + "'");
  }
  return v;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, sep)) out.push_back(cell);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

std::optional<Method> partner(Method method) {
  switch (method) {
    case Method::kPcaUb: return Method::kPcaLb;
    case Method::kOdrUb: return Method::kOdrLb;
    default: return std::nullopt;
  }
}

}  // namespace

const char* to_string(Method method) {
  for (const auto& l : kLabels) {
    if (l.method == method) return l.label;
  }
  return "unknown";
}

Method parse_method(const std::string& label) {
  for (const auto& l : kLabels) {
    if (label == l.label) return l.method;
  }
  throw InputError("unknown method '" + label + "'");
}

std::vector<Method> parse_methods(const std::string& comma_list) {
  std::vector<Method> out;
  for (const std::string& part : split(comma_list, ',')) {
    if (!part.empty()) out.push_back(parse_method(part));
  }
  if (out.empty()) throw InputError("no methods given");
  return out;
}

bool is_lower(Method method) {
  return method == Method::kPcaLb || method == Method::kOdrLb || method == Method::kOdrRlb ||
         method == Method::kHeuristicB;
}

bool is_upper(Method method) { return method == Method::kPcaUb || method == Method::kOdrUb; }

int ReducedDim::resolve(Method method, int m, int k) const {
  if (absolute) return *absolute;
  if (fraction) return std::max(1, static_cast<int>(std::lround(*fraction * m)));
  switch (method) {
    case Method::kFull: return m;
    case Method::kPcaLb:
    case Method::kPcaUb: return std::max(1, static_cast<int>(std::lround(0.2 * m)));
    case Method::kOdrRlb: return std::max(0, k - 1);
    default: return std::min(k, m);
  }
}

void RunSpec::check(const DroInstance& instance) const {
  if (!(time_limit > 0.0)) throw InputError("time limit must be positive");
  if (m1.fraction && !(*m1.fraction > 0.0 && *m1.fraction <= 1.0)) {
    throw InputError("m1 fraction must lie in (0, 1]");
  }
  const int m = instance.m(), k = instance.k();
  const int dim = m1.resolve(method, m, k);
  if (method == Method::kFull) return;
  if (method == Method::kOdrRlb) {
    if (dim < 0 || dim > k) throw InputError("odr-rlb needs 0 <= m1 <= K");
    if (k > m) throw InputError("odr-rlb needs K <= m");
    return;
  }
  if (dim < 1 || dim > m) throw InputError("m1 must lie in [1, m]");
  admm.check();
}

Vector default_heuristic_direction(const DroInstance& instance) {
  const Vector uniform = Vector::Constant(instance.n(), 1.0 / std::max(1, instance.n()));
  Vector out = Vector::Zero(instance.m());
  for (const AffinePiece& piece : instance.objective.pieces) out += piece_slope(piece, uniform);
  return out;
}

BoundReport run_method(const DroInstance& instance, const RunSpec& spec) {
  BoundReport out;
  out.method = spec.method;
  const auto start = Clock::now();
  try {
    spec.check(instance);
    const int m = instance.m(), k = instance.k();
    out.m1 = spec.m1.resolve(spec.method, m, k);
    SolverTolerances tol = spec.admm.solver;
    tol.time_limit = spec.time_limit;
    AdmmConfig cfg = spec.admm;
    cfg.solver = tol;
    cfg.time_limit = std::min(cfg.time_limit, spec.time_limit);
    switch (spec.method) {
      case Method::kFull: {
        const FullSolve fs = solve_full(instance, tol);
        out.status = to_string(fs.solution.status);
        out.iterations = fs.solution.iterations;
        if (fs.solution.status == SolveStatus::kOptimal) {
          out.value = fs.solution.objective;
          out.certified = true;
        }
        break;
      }
      case Method::kPcaLb: fill_from_certificate(out, certify_lb(instance, pca_map(m, out.m1), tol), false); break;
      case Method::kPcaUb: fill_from_certificate(out, certify_ub(instance, pca_map(m, out.m1), tol), true); break;
      case Method::kHeuristicB: {
        const Vector d = spec.direction ? *spec.direction : default_heuristic_direction(instance);
        fill_from_certificate(out, certify_lb(instance, heuristic_direction(instance, d, out.m1).b, tol), false);
        break;
      }
      case Method::kOdrLb: fill_from_admm(out, run_lb(instance, out.m1, cfg), true); break;
      case Method::kOdrUb: fill_from_admm(out, run_ub(instance, out.m1, cfg), true); break;
      case Method::kOdrRlb: fill_from_admm(out, run_rlb(instance, out.m1, cfg), false); break;
    }
  } catch (const std::exception& e) {
    out.error = e.what();
    out.status = "error";
    out.value.reset();
    out.certified = false;
  }
  out.seconds = elapsed(start);
  return out;
}

int worker_count(int requested) {
  int n = requested > 0 ? requested : static_cast<int>(std::thread::hardware_concurrency());
  if (const char* env = std::getenv("ODR_DRO_THREADS")) {
    const int cap = std::atoi(env);
    if (cap > 0) n = std::min(n, cap);
  }
  return std::max(1, n);
}

void annotate_rows(std::vector<MatrixRow>& rows, bool check_sandwich) {
  std::ostringstream violations;
  for (std::size_t base = 0; base < rows.size();) {
    std::size_t end = base;
    while (end < rows.size() && rows[end].size == rows[base].size && rows[end].index == rows[base].index) ++end;
    std::optional<double> full;
    for (std::size_t j = base; j < end; ++j) {
      const BoundReport& r = rows[j].report;
      if (r.method == Method::kFull && r.certified) full = r.value;
    }
    for (std::size_t j = base; j < end; ++j) {
      MatrixRow& row = rows[j];
      BoundReport& r = row.report;
      r.gaps = {};
      if (is_lower(r.method)) r.gaps.gap1 = gap_metrics(r.value, std::nullopt, full).gap1;
      if (is_upper(r.method)) {
        r.gaps.gap2 = gap_metrics(std::nullopt, r.value, full).gap2;
        for (std::size_t i = base; i < end; ++i) {
          const BoundReport& lo = rows[i].report;
          if (lo.method == partner(r.method) && lo.m1 == r.m1 && lo.certified && r.certified) {
            r.gaps.interval = gap_metrics(lo.value, r.value, std::nullopt).interval;
          }
        }
      }
      if (!check_sandwich || !full || !r.certified || !r.value) continue;
      const double slack = 1e-6 * (1.0 + std::abs(*full));
      const bool bad = (is_lower(r.method) && *r.value > *full + slack) ||
                       (is_upper(r.method) && *r.value < *full - slack);
      if (bad) {
        violations << "size " << row.size << " inst " << row.index << " " << row.label << ": bound "
                   << std::setprecision(12) << *r.value << " vs full " << *full << "\n";
      }
    }
    base = end;
  }
  if (!violations.str().empty()) throw SandwichViolation("sandwich violated\n" + violations.str());
}

std::vector<MatrixRow> run_matrix(const std::vector<MatrixInstance>& instances,
                                  const std::vector<RunSpec>& specs, const MatrixOptions& options) {
  const std::size_t cells = instances.size() * specs.size();
  std::vector<MatrixRow> rows(cells);
  std::atomic<std::size_t> next{0};
  const auto work = [&] {
    for (std::size_t i = next++; i < cells; i = next++) {
      const MatrixInstance& inst = instances[i / specs.size()];
      const RunSpec& spec = specs[i % specs.size()];
      MatrixRow& row = rows[i];
      row.size = inst.size;
      row.index = inst.index;
      row.report = run_method(inst.instance, spec);
      row.label = to_string(spec.method);
      if (spec.method != Method::kFull) row.label += ":" + std::to_string(row.report.m1);
    }
  };
  const int threads = std::min<int>(worker_count(options.threads), std::max<std::size_t>(cells, 1));
  std::vector<std::thread> pool;
  for (int t = 1; t < threads; ++t) pool.emplace_back(work);
  work();
  for (auto& th : pool) th.join();

  annotate_rows(rows, options.check_sandwich);
  if (options.on_row) {
    for (const MatrixRow& row : rows) options.on_row(row);
  }
  return rows;
}

void write_csv(std::ostream& out, const std::vector<MatrixRow>& rows, bool timing) {
  out << kCsvHeader << "\n";
  for (const MatrixRow& row : rows) {
    const BoundReport& r = row.report;
    out << row.size << ',' << row.index << ',' << row.label << ',' << format_number(r.value, 10, false)
        << ',' << (timing ? format_number(r.seconds, 3, true) : "-") << ','
        << format_number(r.gaps.gap1, 4, true) << ',' << format_number(r.gaps.gap2, 4, true) << ','
        << format_number(r.gaps.interval, 4, true) << "\n";
  }
}

std::vector<CsvRow> read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) throw InputError("csv: unexpected header");
  std::vector<CsvRow> out;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto cells = split(line, ',');
    if (cells.size() != 8) throw InputError("csv: line " + std::to_string(line_no) + " has wrong arity");
    CsvRow row;
    try {
      row.size = std::stoi(cells[0]);
      row.index = std::stoi(cells[1]);
    } catch (const std::exception&) {
      throw InputError("csv: line " + std::to_string(line_no) + " has a bad size or index");
    }
    row.method = cells[2];
    row.value = parse_number(cells[3]);
    row.time = parse_number(cells[4]);
    row.gap1 = parse_number(cells[5]);
    row.gap2 = parse_number(cells[6]);
    row.interval = parse_number(cells[7]);
    out.push_back(row);
  }
  return out;
}

std::vector<SummaryRow> summarize(const std::vector<CsvRow>& rows) {
  struct Acc {
    SummaryRow row;
    double sums[5] = {0, 0, 0, 0, 0};
    int counts[5] = {0, 0, 0, 0, 0};
  };
  std::vector<Acc> groups;
  std::map<std::pair<int, std::string>, std::size_t> where;
  for (const CsvRow& r : rows) {
    const auto key = std::make_pair(r.size, r.method);
    auto it = where.find(key);
    if (it == where.end()) {
      it = where.emplace(key, groups.size()).first;
      groups.push_back({});
      groups.back().row.size = r.size;
      groups.back().row.method = r.method;
    }
    Acc& acc = groups[it->second];
    ++acc.row.count;
    const std::optional<double> fields[5] = {r.value, r.time, r.gap1, r.gap2, r.interval};
    for (int f = 0; f < 5; ++f) {
      if (fields[f]) {
        acc.sums[f] += *fields[f];
        ++acc.counts[f];
      }
    }
  }
  std::vector<SummaryRow> out;
  for (Acc& acc : groups) {
    std::optional<double>* targets[5] = {&acc.row.value, &acc.row.time, &acc.row.gap1, &acc.row.gap2,
                                         &acc.row.interval};
    for (int f = 0; f < 5; ++f) {
      if (acc.counts[f] > 0) *targets[f] = acc.sums[f] / acc.counts[f];
    }
    out.push_back(acc.row);
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const SummaryRow& a, const SummaryRow& b) { return a.size < b.size; });
  return out;
}

void write_report(std::ostream& out, const std::vector<SummaryRow>& summary) {
  const auto cell = [](std::optional<double> v, int precision) {
    return format_number(v, precision, true);
  };
  out << std::left << std::setw(6) << "Size" << std::setw(16) << "Method" << std::right << std::setw(4)
      << "N" << std::setw(16) << "Value" << std::setw(10) << "Time" << std::setw(10) << "Gap1%"
      << std::setw(10) << "Gap2%" << std::setw(12) << "Interval%" << "\n";
  for (const SummaryRow& r : summary) {
    out << std::left << std::setw(6) << r.size << std::setw(16) << r.method << std::right << std::setw(4)
        << r.count << std::setw(16) << cell(r.value, 4) << std::setw(10) << cell(r.time, 3)
        << std::setw(10) << cell(r.gap1, 2) << std::setw(10) << cell(r.gap2, 2) << std::setw(12)
        << cell(r.interval, 2) << "\n";
  }
}

}  // namespace odr
