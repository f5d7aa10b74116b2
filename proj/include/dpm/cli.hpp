#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace dpm {

inline constexpr int kExitSuccess = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitRuntime = 2;

// Runs one command line (`args` excludes the program name) and writes its
// artifacts under --output-dir. Progress goes to `out`, diagnostics to `err`.
// Returns kExitSuccess, kExitUsage (bad flags or settings) or kExitRuntime.
int execute_command(const std::vector<std::string>& args, std::ostream& out,
                    std::ostream& err);

}  // namespace dpm
