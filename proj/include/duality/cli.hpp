#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace duality::cli {

inline constexpr const char* kToolName = "duality_kit";
inline constexpr const char* kVersion = "1.0.0";

/// Exit codes.
inline constexpr int kPass = 0;
inline constexpr int kFail = 1;
inline constexpr int kUsage = 2;

/// Parses args (without the program name), runs one subcommand and writes its
/// report to --out or to `out`. Diagnostics go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int main(int argc, char** argv);

}  // namespace duality::cli
