#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace abmgp {

/// Exit codes of the command-line tool.
enum ExitCode : int { kExitOk = 0, kExitConfig = 1, kExitData = 2, kExitInternal = 3 };

/// Runs `abmgp <command> ...`. Never throws; errors go to `err` and the
/// return value is one of ExitCode.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run_cli(int argc, char** argv);

}  // namespace abmgp
