// One line per acceptance criterion; exit status is the number of failures.
#include <chrono>
#include <cstdio>

#include "qbrayton/verify.hpp"

int main() {
  using namespace qbrayton::verify;
  int failed = 0;
  for (int id = 1; id <= kCriteria; ++id) {
    const auto start = std::chrono::steady_clock::now();
    const CriterionResult r = run_criterion(id);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s  [%.2fs]\n", summary_line(r).c_str(), seconds);
    if (!r.pass()) ++failed;
  }
  std::printf("%d of %d acceptance criteria passed\n", kCriteria - failed, kCriteria);
  return failed;
}
