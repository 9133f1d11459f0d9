#pragma once

// Command-line entry point. Exit codes: 0 success, 2 usage, 3 config,
// 4 data, 5 solver, 6 model.

#include <string>
#include <vector>

namespace rld {

int run_cli(int argc, const char* const* argv);
int run_cli(const std::vector<std::string>& args);  // args[0] is the program name

}  // namespace rld
