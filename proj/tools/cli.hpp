#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace napts::cli {

/// Exit codes of the napts tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitDiverged = 2;

/// Runs the tool on `args` (without the program name).
int run(std::vector<std::string> args, std::ostream& out, std::ostream& err);
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Replaces `--config FILE` / `--config=FILE` after the subcommand with the
/// file's entries as `--key=value` tokens, placed before the remaining
/// arguments so that command-line values override the file.
std::vector<std::string> expand_config(std::vector<std::string> args);

}  // namespace napts::cli
