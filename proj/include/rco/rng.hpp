#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace rco {

// splitmix64 finalizer, used to derive independent stream seeds from one
// experiment seed without correlated low bits.
constexpr uint64_t splitmix64(uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

inline uint64_t derive_seed(uint64_t base, uint64_t stream, uint64_t index = 0) {
  uint64_t s = splitmix64(base);
  s = splitmix64(s ^ splitmix64(stream ^ 0xA5A5A5A55A5A5A5AULL));
  return splitmix64(s ^ index);
}

namespace seed_stream {
constexpr uint64_t init = 1;    // parameter initialization
constexpr uint64_t batch = 2;   // per-epoch shuffles
constexpr uint64_t split = 3;   // validation split
constexpr uint64_t noise = 4;   // noise robustness sweeps
constexpr uint64_t synth = 5;   // synthetic dataset generation
}  // namespace seed_stream

/// Deterministic generator: std::mt19937_64 (state evolution is pinned by the
/// standard) with explicit float mappings — 24-bit-mantissa uniforms and
/// Box-Muller normals — so sequences never depend on the standard library's
/// distribution implementations.
class Rng {
 public:
  explicit Rng(uint64_t seed) : gen_(seed) {}

  uint64_t next_u64() { return gen_(); }

  // Uniform in [0, 1) with 24 bits of resolution.
  float uniform() { return static_cast<float>(gen_() >> 40) * (1.0f / 16777216.0f); }

  float uniform(float lo, float hi) { return lo + (hi - lo) * uniform(); }

  // Integer in [0, n). Modulo draw; the bias is far below anything observable
  // at dataset sizes.
  int below(int n) { return static_cast<int>(gen_() % static_cast<uint64_t>(n)); }

  // Standard normal via Box-Muller; second value cached.
  float normal() {
    if (has_cached_) {
      has_cached_ = false;
      return cached_;
    }
    float u1 = 1.0f - uniform();  // (0, 1]
    float u2 = uniform();
    float r = std::sqrt(-2.0f * std::log(u1));
    float a = 6.28318530717958647692f * u2;
    cached_ = r * std::sin(a);
    has_cached_ = true;
    return r * std::cos(a);
  }

  // Fisher-Yates permutation of 0..n-1.
  std::vector<int> permutation(int n) {
    std::vector<int> p(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) p[static_cast<size_t>(i)] = i;
    for (int i = n - 1; i > 0; --i) {
      int j = below(i + 1);
      std::swap(p[static_cast<size_t>(i)], p[static_cast<size_t>(j)]);
    }
    return p;
  }

 private:
  std::mt19937_64 gen_;
  float cached_ = 0.0f;
  bool has_cached_ = false;
};

}  // namespace rco
