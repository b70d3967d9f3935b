#pragma once

#include <ostream>

namespace cfreg {

/// Process exit codes used by the command-line tool.
enum ExitCode : int {
  kExitOk = 0,
  kExitInternal = 1,
  kExitUsage = 2,
  kExitIo = 3,
  kExitInvalidInput = 4,
  kExitNumerical = 5,
  kExitUnsupported = 6,
};

/// Entry point of the `cfreg` tool; subcommands register, synth, eval, kmeans,
/// nystrom-audit and bench.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace cfreg
