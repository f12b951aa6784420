#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace lexdrift::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;
inline constexpr int kExitNetwork = 3;

inline constexpr const char* kToolVersion = "0.3.0";

/// Runs the command line; args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace lexdrift::cli
