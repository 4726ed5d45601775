// Copyright 2026 pse-toolkit authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <string>
#include <vector>

namespace pse::cli {

// Stable process exit codes.
enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 2,
  kExitIo = 3,
  kExitNumerical = 4,
  kExitCheckpoint = 5,
};

// Entry point of the `pse` tool; args[0] is the program name.
int RunCli(const std::vector<std::string>& args);

}  // namespace pse::cli
