/**
 * @file rng.hpp
 * @brief Counter-splittable deterministic random source.
 *
 * Every logical stream (drop, block, phase, node) is derived from the root
 * seed by pure hashing, so results do not depend on execution order or
 * thread scheduling. Gaussian variates come from a self-contained
 * Box-Muller transform; nothing implementation-defined is involved, which
 * keeps traces bitwise reproducible.
 */
#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>

namespace cfmimo {

namespace detail {
// splitmix64 finalizer (Steele et al.), used both as generator step and as
// the stream-derivation hash.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}
}  // namespace detail

class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : root_(seed), state_(seed) {}

  /// Independent substream keyed by (root seed, tag); order of fork calls
  /// is irrelevant.
  Rng fork(std::uint64_t tag) const {
    std::uint64_t s = root_ ^ (0xD1B54A32D192ED03ULL * (tag + 1));
    return Rng(detail::splitmix64(s));
  }

  std::uint64_t next_u64() { return detail::splitmix64(state_); }

  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform on [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Integer uniform on [0, n).
  std::uint64_t uniform_index(std::uint64_t n) { return next_u64() % n; }

  /// Standard normal, Box-Muller.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  /// Circularly-symmetric complex Gaussian with E|z|^2 = variance.
  std::complex<double> cnormal(double variance = 1.0) {
    const double s = std::sqrt(variance / 2.0);
    return {s * normal(), s * normal()};
  }

 private:
  std::uint64_t root_;
  std::uint64_t state_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

// Stream tags used across the harness; kept in one place so no two
// purposes ever share a derivation path.
namespace stream {
inline constexpr std::uint64_t kScenario = 1;
inline constexpr std::uint64_t kChannelInit = 2;
inline constexpr std::uint64_t kChannelEvolve = 3;
inline constexpr std::uint64_t kCombinerInit = 4;
inline constexpr std::uint64_t kNoiseDl = 5;
inline constexpr std::uint64_t kNoiseUl1 = 6;
inline constexpr std::uint64_t kNoiseUl2 = 7;
inline constexpr std::uint64_t kMethod = 8;
inline constexpr std::uint64_t kPrecoderInit = 9;
inline constexpr std::uint64_t kDropBase = 1000;
}  // namespace stream

}  // namespace cfmimo
