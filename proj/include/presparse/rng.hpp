#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace presparse {

namespace detail {
inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}
}  // namespace detail

/// SplitMix64: the counter-based generator behind every randomized artifact in
/// this project. State advances by the golden-ratio increment
/// 0x9e3779b97f4a7c15 and each output is the mixed counter, so a stream is a
/// pure function of its 64-bit seed and is reproducible across platforms.
///
/// Derived quantities are fixed too: unit doubles take the top 53 bits,
/// bounded integers use modulo rejection, shuffles are descending
/// Fisher-Yates, and gaussians come from Box-Muller on consecutive outputs.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    state_ += 0x9e3779b97f4a7c15ULL;
    return detail::mix64(state_);
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double next_unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, bound), unbiased. bound must be nonzero.
  std::uint64_t next_below(std::uint64_t bound) {
    const std::uint64_t threshold = (0 - bound) % bound;
    for (;;) {
      const std::uint64_t r = next();
      if (r >= threshold) return r % bound;
    }
  }

  /// Standard normal via Box-Muller; generates pairs, caches the second.
  double next_gaussian() {
    if (has_cached_) {
      has_cached_ = false;
      return cached_;
    }
    double u1 = next_unit();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    const double u2 = next_unit();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * M_PI * u2;
    cached_ = radius * std::sin(angle);
    has_cached_ = true;
    return radius * std::cos(angle);
  }

  /// In-place Fisher-Yates, iterating from the back.
  template <typename T>
  void shuffle(std::vector<T>& values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(next_below(i));
      std::swap(values[i - 1], values[j]);
    }
  }

 private:
  std::uint64_t state_;
  double cached_ = 0.0;
  bool has_cached_ = false;
};

/// Stable substream derivation: stream k of a seed is
/// mix64(seed + (k + 1) * 0x9e3779b97f4a7c15). Used to give junctions, sweep
/// points, and shuffle/init/split phases independent deterministic streams.
inline std::uint64_t derive_stream(std::uint64_t seed, std::uint64_t stream) {
  return detail::mix64(seed + (stream + 1) * 0x9e3779b97f4a7c15ULL);
}

}  // namespace presparse
