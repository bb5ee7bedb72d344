#pragma once

#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace debias {

inline constexpr std::string_view kToolVersion = "1.0.0";

// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitValidationFailed = 1;
inline constexpr int kExitUsageOrIo = 2;

// `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace debias
