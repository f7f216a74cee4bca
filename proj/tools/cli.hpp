#pragma once

#include <iosfwd>

namespace corrproj::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitCriteria = 3; // bench ran but a criterion failed

/// Entry point of the cproj tool. Errors are reported on `err` as a single
/// line "error: <kind>: <message>".
int run(int argc, const char* const* argv, std::istream& in, std::ostream& out, std::ostream& err);

} // namespace corrproj::cli
