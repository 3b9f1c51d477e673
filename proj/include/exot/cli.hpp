#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace exot::cli {

enum ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kInput = 2,
  kSolver = 3,
  kMongeInfeasible = 4,
};

/// Runs one command. `args` excludes the program name. Errors are reported
/// on `err` as a single-line JSON object and mapped to the exit codes above.
int run(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err);

}  // namespace exot::cli
