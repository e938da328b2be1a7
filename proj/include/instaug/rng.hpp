#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

namespace instaug {

/// Deterministic 64-bit generator (splitmix64). Used instead of <random>
/// engines so that sampled values are reproducible across platforms and
/// standard library implementations.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {}

  uint64_t next_u64() {
    uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  /// Uniform double in [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform double in [lo, hi). A degenerate interval returns lo exactly.
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Unbiased uniform integer in [0, n). n must be > 0.
  uint64_t uniform_index(uint64_t n) {
    const uint64_t threshold = (0 - n) % n;  // 2^64 mod n
    for (;;) {
      const uint64_t r = next_u64();
      if (r >= threshold) return r % n;
    }
  }

  /// Zero-mean Gaussian via Box-Muller; consumes exactly two uniforms.
  double normal(double sigma) {
    const double u1 = uniform();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(1.0 - u1));
    return sigma * radius * std::cos(6.283185307179586476925286766559 * u2);
  }

 private:
  uint64_t state_;
};

/// FNV-1a over a byte string, folded with an extra 64-bit key. Stable across
/// platforms (unlike std::hash), so per-scan seeds derived from file names
/// are reproducible everywhere.
inline uint64_t stable_hash64(uint64_t key, std::string_view bytes) {
  uint64_t h = 0xcbf29ce484222325ull;
  for (int i = 0; i < 8; ++i) {
    h = (h ^ ((key >> (8 * i)) & 0xff)) * 0x100000001b3ull;
  }
  for (unsigned char c : bytes) {
    h = (h ^ c) * 0x100000001b3ull;
  }
  return h;
}

}  // namespace instaug
