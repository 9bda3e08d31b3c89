#pragma once

#include <string>
#include <vector>

namespace empmp::cli {

// Runs one CLI invocation. args excludes the program name, e.g.
// {"synth", "--out", "data", "--count", "8"}. Returns the process exit code:
// 0 success, 2 usage or configuration error, 3 numeric failure.
int run(const std::vector<std::string>& args);
int run(int argc, const char* const* argv);

}  // namespace empmp::cli
