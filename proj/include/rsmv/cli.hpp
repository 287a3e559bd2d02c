#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace rsmv::cli {

// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kConfigError = 2;
inline constexpr int kSolverError = 3;
inline constexpr int kZBelowMinimum = 4;
inline constexpr int kValidationFailed = 5;
inline constexpr int kUsage = 64;

/// Entry point shared by the executable and the tests. `args` excludes the
/// program name. Errors are written to `err` as a single JSON object.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Parses "a,b,c" or an inclusive range "start:step:stop".
std::vector<double> parse_z_list(const std::string& text);

} // namespace rsmv::cli
