#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace walktrace {

/// Exit codes of the command-line tool.
enum ExitCode : int {
    kExitOk = 0,
    kExitIo = 2,
    kExitBadInput = 3,
    kExitNumerical = 4,
};

/// Runs the tool on `args` (without the program name). Reports go to `out`;
/// errors are written to `err` as one JSON object
/// {"error":{"kind":...,"message":...},"exit":code}.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace walktrace
