#ifndef NGPP_TOOLS_CLI_HPP
#define NGPP_TOOLS_CLI_HPP

#include <iosfwd>
#include <string>
#include <vector>

namespace ngpp::cli {

enum ExitCode : int { ok = 0, usage = 2, data = 3, numeric = 4 };

/// Runs the command line `args` (without the program name). Reports go to
/// `out`, diagnostics to `err`. Returns the process exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ngpp::cli

#endif  // NGPP_TOOLS_CLI_HPP
