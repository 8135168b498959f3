#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace gaat::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitThreshold = 1;
inline constexpr int kExitUsage = 2;

/// `args` excludes the program name. Output goes to `out`; diagnostics and the
/// single-line error record go to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace gaat::cli
