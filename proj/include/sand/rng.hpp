#pragma once

#include <cstdint>
#include <vector>

namespace sand {

// Counter-based pseudo-random generator.
//
// The whole pipeline draws randomness through this one primitive so that
// every artifact is a pure function of the configured seeds. The word at
// counter c under seed s is the splitmix64 output function applied to
// s + (c+1) * 0x9E3779B97F4A7C15 (golden-ratio increment):
//
//   x ^= x >> 30;  x *= 0xBF58476D1CE4E5B9;
//   x ^= x >> 27;  x *= 0x94D049BB133111EB;
//   x ^= x >> 31;
//
// Random access by counter means batches can be evaluated in parallel
// without sharing generator state.
inline uint64_t counter_hash(uint64_t seed, uint64_t counter) {
  uint64_t x = seed + (counter + 1) * 0x9E3779B97F4A7C15ULL;
  x ^= x >> 30;
  x *= 0xBF58476D1CE4E5B9ULL;
  x ^= x >> 27;
  x *= 0x94D049BB133111EBULL;
  x ^= x >> 31;
  return x;
}

// Derive an independent stream seed from a parent seed and a tag pair.
// Used to give each anchor/sample/epoch its own stream.
inline uint64_t derive_seed(uint64_t seed, uint64_t tag_a, uint64_t tag_b = 0) {
  return counter_hash(counter_hash(seed, tag_a ^ 0xD1B54A32D192ED03ULL), tag_b);
}

class Rng {
 public:
  explicit Rng(uint64_t seed, uint64_t counter = 0) : seed_(seed), counter_(counter) {}

  uint64_t next_u64() { return counter_hash(seed_, counter_++); }

  // Uniform double in [0, 1) with 53 random bits.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform double in [-scale, scale).
  double next_symmetric(double scale) { return (2.0 * next_double() - 1.0) * scale; }

  bool next_bit() { return (next_u64() >> 63) != 0; }

  // Uniform integer in [0, n). Multiply-shift map; the bias of at most
  // n / 2^64 is irrelevant at the scales used here.
  uint64_t next_below(uint64_t n) {
    return static_cast<uint64_t>((static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

  // Fisher-Yates permutation of {0, ..., n-1}.
  std::vector<size_t> permutation(size_t n) {
    std::vector<size_t> p(n);
    for (size_t i = 0; i < n; ++i) p[i] = i;
    for (size_t i = n; i > 1; --i) {
      size_t j = static_cast<size_t>(next_below(i));
      std::swap(p[i - 1], p[j]);
    }
    return p;
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = static_cast<size_t>(next_below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  uint64_t seed() const { return seed_; }
  uint64_t counter() const { return counter_; }

 private:
  uint64_t seed_;
  uint64_t counter_;
};

}  // namespace sand
