#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace axiscal::cli {

enum ExitCode : int {
  kSuccess = 0,
  kFailure = 1,
  kValidationFailure = 2,
};

/// Runs the command line `args` (without the program name). Reports go to
/// `out`, diagnostics and progress to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace axiscal::cli
