#pragma once

#include <ostream>

namespace vulnbench::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFindings = 1;
inline constexpr int kExitUsage = 2;

// Exit codes: 0 success, 1 findings (scan --check, corpus validate, a
// non-empty metrics diff), 2 usage or input errors.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace vulnbench::cli
