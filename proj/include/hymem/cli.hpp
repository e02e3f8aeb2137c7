#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace hymem {

enum ExitCode : int { kExitOk = 0, kExitUsage = 2, kExitInput = 3, kExitSolver = 4 };

/// Runs the `hymem` command line; args exclude the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace hymem
