#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace cadgl::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitCheckFailed = 1,
  kExitUsage = 2,
  kExitRuntime = 3,
};

// Runs one command line (without the program name). Normal output goes to
// `out`, warnings and diagnostics to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace cadgl::cli
