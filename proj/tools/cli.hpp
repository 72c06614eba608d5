#pragma once

#include <string>
#include <vector>

namespace congraph::cli {

/// Exit codes: 0 success, 1 configuration/argument error, 2 data error,
/// 3 numeric or training failure.
enum ExitCode : int { kOk = 0, kConfigError = 1, kDataError = 2, kNumericError = 3 };

/// Runs one subcommand. `args` excludes the program name.
int run(const std::vector<std::string>& args);

}  // namespace congraph::cli
