// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The biasbeam Authors

#pragma once

#include <ostream>
#include <span>
#include <string>

namespace biasbeam {

enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitData = 2, kExitNumeric = 3 };

/// Runs one subcommand (args excludes the program name). Prints a JSON
/// summary line to `out` on success and a message to `err` on failure.
int run_subcommand(std::span<const std::string> args, std::ostream& out, std::ostream& err);

}  // namespace biasbeam
