#pragma once

#include <iosfwd>

namespace shadowrank {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;
inline constexpr int kExitInfeasible = 3;

/// Subcommands: synth, train, rank, bench, serve. Diagnostics go to `err`.
int run_cli(int argc, const char* const* argv, std::istream& in, std::ostream& out, std::ostream& err);
int run_cli(int argc, const char* const* argv);

}  // namespace shadowrank
