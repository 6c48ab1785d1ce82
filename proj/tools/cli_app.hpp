#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace gann::cli {

/// Parses `args` (without the program name) and runs the subcommand.
/// Returns the process exit code: 0 success, 2 usage error, 1 other failure.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace gann::cli
