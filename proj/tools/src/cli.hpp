#ifndef TWINCBR_TOOLS_CLI_HPP_
#define TWINCBR_TOOLS_CLI_HPP_

#include <ostream>
#include <string>
#include <vector>

namespace twincbr::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;

// `args` excludes the program name. Reports go to --out (stdout prints the
// path) or to `out` under --stdout; diagnostics go to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err);

}  // namespace twincbr::cli

#endif  // TWINCBR_TOOLS_CLI_HPP_
