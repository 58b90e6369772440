#pragma once

// Small deterministic RNG (splitmix64). Used instead of <random>
// distributions so that generated streams are identical across standard
// library implementations.

#include <cstdint>
#include <string>

namespace hera {

struct SplitMix64 {
  uint64_t state = 0;

  explicit SplitMix64(uint64_t seed = 0) : state(seed) {}

  uint64_t next() {
    uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1).
  double u01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, n).
  uint64_t below(uint64_t n) { return n ? next() % n : 0; }

  bool bernoulli(double p) { return u01() < p; }
};

inline uint64_t mix_seed(uint64_t a, uint64_t b) {
  SplitMix64 r(a ^ (0x9e3779b97f4a7c15ull + b));
  r.next();
  return r.next();
}

inline uint64_t hash64(const std::string& s) {
  uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace hera
