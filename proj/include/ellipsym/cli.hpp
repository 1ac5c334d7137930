#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ellipsym {

/// Entry point of the `ellipsym` command (args exclude the program name).
/// Returns the process exit code: 0 on success, 1 on any error.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ellipsym
