#pragma once

#include <ostream>

namespace vcascade::cli {

// Exit codes shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 2;
inline constexpr int kExitNumeric = 3;
inline constexpr int kExitConfig = 4;
inline constexpr int kExitInternal = 1;

// Subcommands: train, classify, evaluate, gen, bench. Reports go to `out`,
// diagnostics to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace vcascade::cli
