// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "chop/backends/backend.hpp"
#include "chop/core/types.hpp"

// The `chop` command line: extract, run, eval, replay and validate.
namespace chop::cli {

enum ExitStatus : int { kOk = 0, kUsage = 1, kValidation = 2, kInfrastructure = 3 };

struct BackendOptions {
    std::string kind = "replay";  // scripted | replay | replay-strict | record | http
    std::filesystem::path scripts;
    std::filesystem::path cassettes;
};

std::shared_ptr<backends::CompletionBackend> make_backend(const BackendOptions& options);

// Maps an error code to the exit status reported for it.
int exit_status_for(const std::exception& e);

// `args` excludes the program name.
int run_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run_main(int argc, char** argv);

}  // namespace chop::cli
