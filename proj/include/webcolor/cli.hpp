#pragma once

#include <string>
#include <vector>

namespace webcolor {

// Runs one CLI invocation. args excludes the program name. Returns the
// process exit code: 0 success, 1 usage error, 2 data error, 3 numeric
// failure.
int run_cli(const std::vector<std::string>& args);
int run_cli(int argc, const char* const* argv);

}  // namespace webcolor
