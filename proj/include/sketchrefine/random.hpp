#pragma once

#include <cstdint>
#include <random>

namespace sketchrefine {

/// Seeded generator with platform-independent draws. std::mt19937_64 output is
/// fully specified; the standard distributions are not, so conversions to
/// doubles are done here.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform in [0, 1) with 53 random bits.
  double unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }

  /// Uniform in [-bound, bound].
  double symmetric(double bound) { return uniform(-bound, bound); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace sketchrefine
