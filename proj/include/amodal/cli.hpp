#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "amodal/error.hpp"

namespace amodal::cli {

/// Process exit codes.
enum ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kPartialFailure = 2,   // some samples failed; the rest were processed
  kIoFormat = 3,         // IoError, FormatError
  kInvalidData = 4,      // dimension, mask, depth-order and spec problems
  kFitFailure = 5,       // InsufficientSupport, DegenerateSupport
  kNumerical = 6,        // NumericalError
  kSelfcheckFailed = 7,
};

int exit_code_for(ErrorKind kind) noexcept;

/// Runs one invocation. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace amodal::cli
