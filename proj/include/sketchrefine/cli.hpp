#pragma once

#include <ostream>

namespace sketchrefine {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;
inline constexpr int kExitInternal = 3;

/// Command-line front end:
///   gen --n N --seed S --out DIR
///   build-index --corpus DIR --d D --out FILE.frix
///   refine --index FILE --in DIR|FILE.json --out DIR [--k] [--steps] [--no-projection] [--no-transform]
///   eval --index FILE --corpus DIR --seeds N --magnitude T,R,S,H --report FILE.json
///   serve --index FILE --port N
/// Exit codes: 0 success, 1 usage error, 2 data error, 3 internal error.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace sketchrefine
