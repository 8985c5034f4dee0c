// Acceptance gate: runs all fourteen criteria and prints one line per criterion.
#include <cstdio>
#include <string>

#include "rtree/verify.hpp"

int main() {
  int failed = 0;
  for (const auto& suite : rtree::suite_names()) {
    const auto report = rtree::run_suite(suite);
    for (const auto& c : report.criteria) {
      std::printf("criterion %2d %-4s %s\n", c.id, c.pass ? "PASS" : "FAIL",
                  rtree::format_criterion(report.suite, c).c_str());
      std::fflush(stdout);
      if (!c.pass) ++failed;
    }
  }
  std::printf("acceptance: %d criteria failed\n", failed);
  return failed == 0 ? 0 : 1;
}
