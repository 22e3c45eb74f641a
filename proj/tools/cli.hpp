#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace tisim::cli {

/// Exit codes: 0 success, 1 usage or spec error, 2 consistency violation.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitInconsistent = 2;

/// Dispatches `sim <args...>` (argv[0] excluded).
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

std::string cmd_list();

}  // namespace tisim::cli
