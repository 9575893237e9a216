#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace fcr::cli {

/// Exit codes. Library ErrorKinds map onto 2..4.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInternal = 1;
inline constexpr int kExitArgument = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitNumerical = 4;

/// Environment variable naming the default output directory.
inline constexpr const char* kOutDirEnv = "FCR_OUT_DIR";

/// Runs one subcommand. `args` excludes the program name. Summaries go to
/// `out`; usage text and a one-line error JSON go to `err`. Files are written
/// only after the subcommand has fully succeeded.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int run(int argc, const char* const* argv);

}  // namespace fcr::cli
