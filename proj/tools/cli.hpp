#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace fracmg::cli {

/// Parses argv, runs the chosen subcommand and returns the process exit code:
/// 0 success, 1 invalid configuration or usage, 2 a case or check failed.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Same, for an argument list without the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace fracmg::cli
