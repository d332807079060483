#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace scav::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitRuntime = 2;

/// Runs one subcommand; `args` excludes the program name. Results go to
/// `out`, logs and errors to stderr.
int run(const std::vector<std::string>& args, std::ostream& out);

int run(int argc, char** argv);

}  // namespace scav::cli
