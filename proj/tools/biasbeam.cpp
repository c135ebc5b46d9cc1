// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The biasbeam Authors

#include <iostream>
#include <string>
#include <vector>

#include "biasbeam/cli.hpp"

int main(int argc, char** argv) {
  const std::vector<std::string> args(argv + 1, argv + argc);
  return biasbeam::run_subcommand(args, std::cout, std::cerr);
}
