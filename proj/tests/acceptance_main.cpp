#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include "odr_dro/verify.hpp"

// Prints one PASS/FAIL line per acceptance criterion; optional arguments
// select criteria by number. Exit status is nonzero when any line fails.
int main(int argc, char** argv) {
  odr::VerifyOptions options;
  for (int i = 1; i < argc; ++i) options.criteria.push_back(std::atoi(argv[i]));
  bool ok = true;
  for (const odr::CriterionResult& r : odr::run_acceptance(options)) {
    std::cout << odr::format_result(r) << std::endl;
    ok = ok && r.passed;
  }
  return ok ? EXIT_SUCCESS : EXIT_FAILURE;
}
