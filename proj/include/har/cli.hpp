#pragma once

#include <iosfwd>
#include <span>
#include <string>

namespace har::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;

/// Runs the command line tool. argv[0] is the program name. Standard input is
/// only read by `predict` when no input file is given.
int run(std::span<const std::string> argv, std::istream& in, std::ostream& out, std::ostream& err);

} // namespace har::cli
