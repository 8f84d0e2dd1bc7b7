// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The Diverge Authors

#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace diverge {

/// Process exit codes of the command-line tool.
enum ExitCode : int {
    kExitOk = 0,
    kExitFatal = 1,
    kExitPartial = 2,
};

/// Runs `diverge <args...>` (without the program name) and returns the exit code.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run_cli(const std::vector<std::string>& args);

/// Writes `text` to `path` via a temporary sibling and a rename.
void write_file_atomic(const std::filesystem::path& path, const std::string& text);

}  // namespace diverge
