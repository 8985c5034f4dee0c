#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace rtree {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  double measured = 0.0;   // the quantity compared against the threshold
  double threshold = 0.0;
  std::string detail;      // free-form, key=value pairs
  double seconds = 0.0;
};

struct SuiteReport {
  std::string suite;
  std::vector<CriterionResult> criteria;
  double seconds = 0.0;
  bool all_pass() const;
};

// Acceptance suites: "exact" (criteria 1-5), "montecarlo" (6-10), "dimension" (11-14).
// Failures are report content; an unknown suite name throws UsageError.
SuiteReport run_suite(std::string_view suite);
const std::vector<std::string>& suite_names();

// Individual criteria, numbered as in the suites.
CriterionResult run_criterion(int id);

// One line per criterion, `suite=... criterion=N result=PASS|FAIL measured=... threshold=...`,
// then a `suite=... passed=k/m seconds=...` line.
void print_report(const SuiteReport& report, std::ostream& out);
std::string format_criterion(std::string_view suite, const CriterionResult& c);

}  // namespace rtree
