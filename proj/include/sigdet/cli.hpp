#pragma once

#include <string>
#include <vector>

namespace sigdet::cli {

// Subcommands: generate, count, rate, bag, fuse, evaluate, pipeline, report.
// Exit codes: 0 success, 1 usage/config error, 2 data validation error,
// 3 runtime failure. Errors print one machine-parseable line to stderr:
//   sigdet: error: <class>: <detail>
int run(const std::string& subcommand,
        const std::string& config_path,
        const std::vector<std::string>& overrides);

int run_cli(int argc, const char* const* argv);

}  // namespace sigdet::cli
