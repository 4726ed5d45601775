// Copyright 2026 pse-toolkit authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "pse/cli/cli.h"

int main(int argc, char** argv) {
  return pse::cli::RunCli(std::vector<std::string>(argv, argv + argc));
}
