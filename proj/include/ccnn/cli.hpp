#pragma once

#include <string>
#include <vector>

namespace ccnn::cli {

// Entry point shared by the binary and the tests. Returns the process exit
// status: 0 success, 2 flag/validation failure, 1 runtime failure.
int run(int argc, const char* const* argv);
int run(const std::vector<std::string>& args);  // args without the program name

}  // namespace ccnn::cli
