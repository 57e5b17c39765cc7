#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace anchorframe::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitInternal = 1,
  kExitUsage = 2,
  kExitNoTarget = 3,
  kExitService = 4,
};

/// Runs one command. `args` excludes the program name. Machine-readable
/// results go to `out` as one JSON object per line; diagnostics go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace anchorframe::cli
