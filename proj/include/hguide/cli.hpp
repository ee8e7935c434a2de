#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace hguide {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;  // I/O, malformed input, port in use
inline constexpr int kExitUsage = 2;    // bad flags

// Entry point behind the hguide executable. args excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace hguide
