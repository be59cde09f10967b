#pragma once

#include <string>

namespace cli {

// Carries the process exit code alongside the message: 2 for parse, domain,
// and configuration problems, 3 for solver non-convergence.
struct CliError {
  int exit_code;
  std::string message;
};

}  // namespace cli
