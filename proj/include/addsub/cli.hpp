#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace addsub {

/// Exit codes of the command-line front end.
enum ExitCode : int { kExitOk = 0, kExitCheckFailed = 1, kExitValidation = 2, kExitNumeric = 3 };

/// Runs the command line `addsub <args...>` (args exclude the program name).
/// Results go to `out` or to the configured output file; diagnostics and
/// wall-clock timing go to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace addsub
