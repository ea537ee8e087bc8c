#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace netot::verify {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

struct SuiteOptions {
  bool quick = false;        // smaller grids and fewer random instances
  std::ostream* log = nullptr;  // progress lines, if set
};

/// Runs the eleven acceptance criteria and returns one result per criterion, ordered by id.
std::vector<CriterionResult> run_acceptance(const SuiteOptions& options);

/// "PASS  3  duality gap  (detail)" style line.
std::string format_result(const CriterionResult& r);

}  // namespace netot::verify
