#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace mared::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInvalid = 1;
inline constexpr int kExitUsage = 2;

/// Runs the `mared` command line. `args` excludes the program name. Errors go
/// to `err`, one per line, prefixed "mared-error:".
int run(const std::vector<std::string>& args, std::istream& in, std::ostream& out,
        std::ostream& err);

}  // namespace mared::cli
