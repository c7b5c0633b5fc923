#pragma once

#include <cstdint>
#include <random>

namespace lapconv {

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

/// Seeded generator used by every sampler.
///
/// Engine: std::mt19937_64, whose output sequence is fixed by the C++
/// standard. Uniform and normal variates are derived here rather than through
/// <random> distributions (those are implementation-defined), so a stream is
/// reproducible across standard libraries. Stream version: 1.
class Rng {
public:
  static constexpr int kStreamVersion = 1;

  explicit Rng(std::uint64_t seed) : engine_(mix64(seed)) {}

  /// Independent substream for task `task` of a run seeded with `seed`:
  /// the engine is keyed on mix64(mix64(seed) xor task).
  static Rng substream(std::uint64_t seed, std::uint64_t task);

  std::uint64_t next() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Standard normal (Box-Muller, one variate per call).
  double normal();

private:
  std::mt19937_64 engine_;
};

} // namespace lapconv
