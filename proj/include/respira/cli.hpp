#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace respira {

/// Exit codes of the command-line tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;  // selftest failures, unexpected errors
inline constexpr int kExitInput = 2;
inline constexpr int kExitPipeline = 3;

/// Runs `respira <args...>` (args exclude the program name).
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace respira
