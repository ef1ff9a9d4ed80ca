#pragma once

#include <atomic>
#include <iosfwd>
#include <string>
#include <vector>

namespace taxelmap::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// Runs one invocation; args excludes the program name.
/// Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Set to make a running `serve` return.
std::atomic<bool>& stop_flag();

}  // namespace taxelmap::cli
