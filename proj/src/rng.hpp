#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace comorec {

// splitmix64, used to derive independent sub-seeds from one master seed.
inline uint64_t mix_seed(uint64_t seed, uint64_t salt) {
  uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Seeded RNG with hand-rolled draws. mt19937_64's output stream is fully
// specified by the standard, and none of the std distributions are, so every
// draw we care about reproducing goes through these helpers.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  uint64_t next_u64() { return engine_(); }

  // Uniform in [0, n). Modulo bias is below 2^-32 for any n we use.
  uint64_t next_index(uint64_t n) { return engine_() % n; }

  // Uniform in [0, 1) with 53 random bits.
  double next_real() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double next_range(double lo, double hi) {
    return lo + (hi - lo) * next_real();
  }

  bool bernoulli(double p) { return next_real() < p; }

  // Fisher-Yates.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = static_cast<size_t>(next_index(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  // k distinct values from [0, n), k <= n, in draw order (partial shuffle).
  std::vector<uint32_t> sample_without_replacement(uint32_t n, uint32_t k);

 private:
  std::mt19937_64 engine_;
};

inline std::vector<uint32_t> Rng::sample_without_replacement(uint32_t n, uint32_t k) {
  std::vector<uint32_t> pool(n);
  for (uint32_t i = 0; i < n; ++i) pool[i] = i;
  std::vector<uint32_t> out;
  out.reserve(k);
  for (uint32_t i = 0; i < k; ++i) {
    uint32_t j = i + static_cast<uint32_t>(next_index(n - i));
    std::swap(pool[i], pool[j]);
    out.push_back(pool[i]);
  }
  return out;
}

}  // namespace comorec
