#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace bdnet::cli {

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kConfigError = 2,
  kNumericalFailure = 3,
  kIoError = 4,
};

/// Runs one command line (without the program name). Artifacts go to the
/// configured output directory; human-readable results to `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

std::string version();

}  // namespace bdnet::cli
