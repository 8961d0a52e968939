#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace relaxor::cli {

enum ExitCode : int { kSuccess = 0, kNumericalFailure = 1, kInvalidInput = 2 };

/// Runs one `relaxor` invocation; `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace relaxor::cli
