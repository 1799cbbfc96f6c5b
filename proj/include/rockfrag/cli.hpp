#pragma once

#include <iosfwd>

namespace rockfrag::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 1;
inline constexpr int kExitAnalysis = 2;

/// Entry point of the `rockfrag` tool: verbs fit, analyze, mission, compare.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace rockfrag::cli
