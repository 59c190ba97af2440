#pragma once

#include <string>
#include <vector>

namespace matef {

/// Runs one CLI invocation. Exit codes: 0 success, 1 domain error (message on
/// the error stream), 2 usage error. No interactive prompts; all outputs are
/// files or standard output.
int dispatch(const std::vector<std::string>& args);

} // namespace matef
