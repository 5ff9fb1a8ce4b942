#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace odr {

struct CriterionResult {
  int id = 0;
  std::string title;
  bool passed = false;
  double seconds = 0.0;
  double budget_seconds = 0.0;  // 0: no runtime budget
  std::string detail;
};

struct VerifyOptions {
  std::vector<int> criteria;  // empty: all of 1..10
  std::ostream* progress = nullptr;
};

// Runs the acceptance suites. Tolerances and budgets are fixed in the
// implementation. Criterion 6 reuses the instances and maps of criterion 3;
// criterion 9 audits every optimal conic solve made by the suites that ran
// before it.
std::vector<CriterionResult> run_acceptance(const VerifyOptions& options = {});

// "PASS [3] title (12.3 s / 180 s): detail"
std::string format_result(const CriterionResult& result);

}  // namespace odr
