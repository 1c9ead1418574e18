#pragma once

namespace crackforge::cli {

/// Exit codes of the command-line front end.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitRuntime = 3;

/// Parses and runs one command line (argv[0] is the program name).
int run(int argc, const char* const* argv);

}  // namespace crackforge::cli
