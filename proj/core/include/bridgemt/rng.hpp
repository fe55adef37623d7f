#pragma once

#include <cstdint>
#include <cstddef>

namespace bridgemt {

// Deterministic 64-bit generator (splitmix64). The standard library engines
// are portable but its distributions are not, so all integer/real mappings
// are spelled out here. Every seeded artifact (corpora, init, scheduling)
// goes through this class and is therefore reproducible across platforms.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {}

  uint64_t next() {
    uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, bound). Modulo mapping; bias is negligible for the
  // small bounds used here and keeps the mapping trivially documentable.
  uint64_t below(uint64_t bound) { return next() % bound; }

  // Uniform double in [0, 1) with 53 bits of precision.
  double real() { return (next() >> 11) * 0x1.0p-53; }

  // Uniform double in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * real(); }

  // Derive an independent stream, e.g. one per task iterator.
  Rng split() { return Rng(next()); }

 private:
  uint64_t state_;
};

// Fisher-Yates shuffle driven by Rng so the permutation is seed-determined.
template <typename Vec>
void shuffle(Vec& v, Rng& rng) {
  for (size_t i = v.size(); i > 1; --i) {
    size_t j = static_cast<size_t>(rng.below(i));
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace bridgemt
