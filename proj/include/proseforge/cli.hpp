#pragma once

#include <string>
#include <vector>

namespace proseforge {

// Runs one CLI invocation; args excludes the program name. Returns the
// process exit code: 0 success, 2 usage error, 1 runtime failure.
int run_cli(const std::vector<std::string>& args);

} // namespace proseforge
