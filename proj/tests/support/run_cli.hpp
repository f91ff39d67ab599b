// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 Sven Contributors

#pragma once

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <string>

#include "sven/binary_io.hpp"

namespace sven::testing {

struct CliResult {
    int code = -1;
    std::string out;
    std::string err;
};

/// Runs `binary args` through the shell, capturing both streams via files.
inline CliResult run_cli(const std::string& binary, const std::string& args, const std::filesystem::path& scratch) {
    const auto out = scratch / "cli.stdout";
    const auto err = scratch / "cli.stderr";
    const std::string cmd = "'" + binary + "' " + args + " >'" + out.string() + "' 2>'" + err.string() + "'";
    const int status = std::system(cmd.c_str());
    CliResult r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    const auto o = io::read_file(out);
    const auto e = io::read_file(err);
    r.out.assign(o.begin(), o.end());
    r.err.assign(e.begin(), e.end());
    return r;
}

} // namespace sven::testing
