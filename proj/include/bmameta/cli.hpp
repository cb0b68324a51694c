#pragma once

#include <iosfwd>

namespace bmameta {

// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitNotConverged = 3;

// Entry point of the bma-meta tool; writes to `out` / `err` instead of the
// process streams so tests can drive it in-process.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace bmameta
