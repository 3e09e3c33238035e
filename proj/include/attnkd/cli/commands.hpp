#pragma once

// Entry point of the `attnkd` tool. Exit codes: 0 ok, 2 usage or config,
// 3 environment or IO, 4 numerical abort.

#include <iosfwd>
#include <string>
#include <vector>

namespace attnkd::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitIo = 3;
inline constexpr int kExitNumeric = 4;

// `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace attnkd::cli
