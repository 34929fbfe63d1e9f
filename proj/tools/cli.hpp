#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace qip::cli {

/// Process exit codes.
enum ExitCode : int {
  kOk = 0,
  kInternal = 1,
  kValidation = 2,  // bad flags, config or input files
  kSynthesis = 3,   // not stabilizable / uncontrollable / unstable closed loop
  kDiverged = 4,    // simulation left the valid regime
  kRegression = 5,  // check-reference found deviations beyond tolerance
};

/// Runs one command line (args excludes the program name).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace qip::cli
