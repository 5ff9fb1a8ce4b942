#pragma once

#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "odr_dro/admm.hpp"
#include "odr_dro/bounds.hpp"
#include "odr_dro/errors.hpp"
#include "odr_dro/model.hpp"

namespace odr {

enum class Method { kFull, kPcaLb, kPcaUb, kOdrLb, kOdrUb, kOdrRlb, kHeuristicB };

const char* to_string(Method method);
// Accepts the lower-case labels: full, pca-lb, pca-ub, odr-lb, odr-ub,
// odr-rlb, heuristic-b. Throws InputError otherwise.
Method parse_method(const std::string& label);
std::vector<Method> parse_methods(const std::string& comma_list);
bool is_lower(Method method);  // pca-lb, odr-lb, odr-rlb, heuristic-b
bool is_upper(Method method);  // pca-ub, odr-ub

// Reduced dimension given either absolutely or as a fraction of m. With
// neither set the method default applies: K for odr-lb, odr-ub and
// heuristic-b, K - 1 for odr-rlb, 20% of m for the PCA bounds.
struct ReducedDim {
  std::optional<int> absolute;
  std::optional<double> fraction;
  int resolve(Method method, int m, int k) const;
};

struct RunSpec {
  Method method = Method::kFull;
  ReducedDim m1;
  AdmmConfig admm;
  std::optional<Vector> direction;  // heuristic-b; default from the piece slopes
  double time_limit = 300.0;        // seconds per solve

  // Throws InputError for an incompatible method / m1 pair.
  void check(const DroInstance& instance) const;
};

struct BoundReport {
  Method method = Method::kFull;
  int m1 = 0;
  std::optional<double> value;  // empty when no value was produced
  bool certified = false;
  double seconds = 0.0;
  int iterations = 0;
  std::string status;  // solver or ADMM outcome
  std::string error;   // set when the run threw
  GapMetrics gaps;
};

// Direction used by heuristic-b when none is supplied: the sum over pieces of
// the slope y_k at the uniform decision x = 1/n.
Vector default_heuristic_direction(const DroInstance& instance);

// Runs one method. Exceptions from the solve are recorded in error; the
// report never throws for solver trouble.
BoundReport run_method(const DroInstance& instance, const RunSpec& spec);

struct MatrixInstance {
  int size = 0;
  int index = 0;
  DroInstance instance;
};

struct MatrixRow {
  int size = 0;
  int index = 0;
  std::string label;  // method, with ":m1" for reduced methods
  BoundReport report;
};

class SandwichViolation : public Error {
 public:
  using Error::Error;
};

struct MatrixOptions {
  int threads = 0;  // 0: ODR_DRO_THREADS or hardware concurrency
  bool check_sandwich = true;
  std::function<void(const MatrixRow&)> on_row;  // progress, called in row order
};

// Runs every (instance, spec) cell on a worker pool and fills gap metrics
// against the full solve of the same instance when one of the specs is
// full. Row order is instance-major, then spec order. Throws
// SandwichViolation when a certified bound lands on the wrong side of the
// full value.
std::vector<MatrixRow> run_matrix(const std::vector<MatrixInstance>& instances,
                                  const std::vector<RunSpec>& specs,
                                  const MatrixOptions& options = {});

// Fills gap metrics for rows grouped by consecutive (size, index), pairing
// each bound with the certified full value of its group and each upper bound
// with the lower bound of the same family and m1. With check_sandwich, a
// certified bound on the wrong side of the full value by more than
// 1e-6 (1 + |full|) throws SandwichViolation.
void annotate_rows(std::vector<MatrixRow>& rows, bool check_sandwich = true);

int worker_count(int requested);

inline constexpr const char* kCsvHeader = "Size,Inst,Method,Value,Time,Gap1,Gap2,IntervalGap";

// timing = false writes "-" in the Time column so repeated runs compare
// byte for byte.
void write_csv(std::ostream& out, const std::vector<MatrixRow>& rows, bool timing = true);

struct CsvRow {
  int size = 0;
  int index = 0;
  std::string method;
  std::optional<double> value, time, gap1, gap2, interval;
};
// Throws InputError on a malformed header or row.
std::vector<CsvRow> read_csv(std::istream& in);

// Per (size, method) means over instances; a cell is "-" when no instance
// had the metric.
struct SummaryRow {
  int size = 0;
  std::string method;
  int count = 0;
  std::optional<double> value, time, gap1, gap2, interval;
};
std::vector<SummaryRow> summarize(const std::vector<CsvRow>& rows);
void write_report(std::ostream& out, const std::vector<SummaryRow>& summary);

// SVG line charts with one series per method against problem size.
enum class PlotMetric { kGap1, kGap2, kInterval, kTime };
std::string render_svg(const std::vector<SummaryRow>& summary, PlotMetric metric);

}  // namespace odr
