#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>

namespace icssl {

// Sub-stream tags. Every random quantity in an episode is drawn from the
// stream named here, so changing how many draws one stage makes never shifts
// the draws of another.
enum class Stream : std::uint64_t {
  Sampling = 0x53414d50ULL,
  Motion = 0x4d4f5449ULL,
  Center = 0x43454e54ULL,
  Reveal = 0x52455645ULL,
  ConeAngle = 0x434f4e45ULL,
  Harness = 0x48415253ULL,
  Validation = 0x56414c49ULL,
};

// SplitMix64 finalizer; bijective on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Hash a base seed together with an ordered list of indices. Used for
// indexed (not sequential) seed streams: episode e of cell (i, j) always gets
// the same seed regardless of how many episodes the run asked for.
inline std::uint64_t derive_seed(std::uint64_t base,
                                 std::initializer_list<std::uint64_t> path) {
  std::uint64_t h = mix64(base);
  for (auto p : path) h = mix64(h ^ mix64(p + 0x632be59bd9b4e019ULL));
  return h;
}

/// Portable generator: std::mt19937_64 (bit-exact across standard libraries)
/// with hand-written conversions, since the std distributions are not
/// specified bit-for-bit.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(mix64(seed)) {}
  Rng(std::uint64_t seed, Stream stream)
      : engine_(derive_seed(seed, {static_cast<std::uint64_t>(stream)})) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Uniform integer in [0, n), rejection sampling without modulo bias.
  std::uint64_t below(std::uint64_t n) {
    if (n <= 1) return 0;
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % n;
  }

  // Standard normal via Box-Muller (one value per call, no caching).
  double normal() {
    double u1 = uniform01();
    while (u1 <= 0.0) u1 = uniform01();
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace icssl
