#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace rpi {

/// Process exit codes.
enum ExitCode : int { kExitPass = 0, kExitConfig = 1, kExitReject = 2, kExitInconclusive = 3 };

/// Runs `rpi <command> CONFIG [--out DIR] [-v] [--dump-window]` where args
/// excludes the program name. Writes the one-line JSON summary to `out` and
/// the human log to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace rpi
