#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace addsub {

struct CheckOptions {
  /// Multiplies every Monte Carlo sample size; 1 is the full acceptance scale.
  double scale = 1.0;
  std::uint64_t seed = 1;
};

struct CheckResult {
  int id = 0;
  std::string name;
  std::string group;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
  double budget = 0.0;  // wall-clock allowance in seconds
};

struct CheckInfo {
  int id;
  const char* name;
  const char* group;
  double budget;
};

/// The invariant suite, numbered 1 to 10.
const std::vector<CheckInfo>& check_catalog();

/// Runs one invariant. A check passes when its statistical or numerical
/// criterion holds and it finishes within its budget.
CheckResult run_check(int id, const CheckOptions& options = {});

/// Runs the invariants whose group, name or number equals filter (all when empty).
std::vector<CheckResult> run_checks(const std::string& filter, const CheckOptions& options = {});

}  // namespace addsub
