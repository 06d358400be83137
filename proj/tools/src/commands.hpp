#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace netlab::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kInputError = 2, kRuntimeFlag = 3 };

/// Runs `netlab` with `args` (without the program name). Results go to `out`
/// unless --out names a file; the one-line error, if any, goes to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace netlab::cli
