#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <string_view>
#include <utility>

namespace bevlift {

// Counter-free splittable generator (splitmix64). All randomness in the
// library flows from explicit 64-bit seeds through this engine; there is no
// ambient entropy anywhere.
struct SplitMix64 {
  using result_type = std::uint64_t;
  std::uint64_t state = 0;

  explicit SplitMix64(std::uint64_t seed = 0) : state(seed) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<std::uint64_t>::max();
  }

  result_type operator()() {
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
};

// FNV-1a, used to turn module tags into seed offsets.
inline std::uint64_t hash64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Derives a per-module seed from the root seed. Mixing through splitmix
// decorrelates nearby root seeds.
inline std::uint64_t derive_seed(std::uint64_t root, std::string_view tag) {
  SplitMix64 g(root ^ hash64(tag));
  return g();
}

inline double uniform01(SplitMix64& g) {
  return static_cast<double>(g() >> 11) * 0x1.0p-53;  // [0, 1)
}

inline double uniform(SplitMix64& g, double lo, double hi) {
  return lo + (hi - lo) * uniform01(g);
}

// One Box-Muller step: two independent N(0,1) draws.
inline std::pair<double, double> gaussian_pair(SplitMix64& g) {
  const double u1 = 1.0 - uniform01(g);  // (0, 1]
  const double u2 = uniform01(g);
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 2.0 * std::numbers::pi * u2;
  return {r * std::cos(a), r * std::sin(a)};
}

inline double gaussian(SplitMix64& g) { return gaussian_pair(g).first; }

}  // namespace bevlift
