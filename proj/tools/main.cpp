// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The Diverge Authors

#include <string>
#include <vector>

#include "diverge/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return diverge::run_cli(args);
}
