#pragma once

#include <iosfwd>

namespace olive::cli {

// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kUsage = 1;
inline constexpr int kDataError = 2;
inline constexpr int kIoError = 3;

/// Runs one olive-yield subcommand. Usage errors go to `err` with exit 1;
/// data/config errors exit 2; I/O errors exit 3.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace olive::cli
