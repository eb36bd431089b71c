#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace pce::cli {

// Exit codes: 0 success, 1 runtime or data error, 2 usage error.
inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitUsage = 2;

// Relative output paths resolve against this directory when it is set.
inline constexpr const char* kOutputDirEnv = "PCE_OUTPUT_DIR";

// args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace pce::cli
