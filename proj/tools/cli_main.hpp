#pragma once

#include <string>
#include <vector>

namespace rbrom {

/// Command-line driver: offline / online / eval / bench subcommands.
/// Returns 0 on success, 2 on configuration errors, 3 on compute errors.
int cli_main(int argc, const char* const* argv);
int cli_main(const std::vector<std::string>& args);  // without argv[0]

}  // namespace rbrom
