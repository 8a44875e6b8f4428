// Runs the invariant suite at full scale, one line per criterion.
// Usage: acceptance [criterion number ...]

#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include "addsub/checks.hpp"

int main(int argc, char** argv) {
  std::vector<int> ids;
  for (int i = 1; i < argc; ++i) ids.push_back(std::atoi(argv[i]));
  if (ids.empty())
    for (const auto& info : addsub::check_catalog()) ids.push_back(info.id);

  const addsub::CheckOptions options{1.0, 20240601};
  int failures = 0;
  for (int id : ids) {
    const auto r = addsub::run_check(id, options);
    std::printf("criterion %2d %-24s %s  %.2fs/%.0fs  %s\n", r.id, r.name.c_str(), r.passed ? "PASS" : "FAIL", r.seconds,
                r.budget, r.detail.c_str());
    std::fflush(stdout);
    failures += r.passed ? 0 : 1;
  }
  return failures == 0 ? EXIT_SUCCESS : EXIT_FAILURE;
}
