#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace s2fgl {

// splitmix64 finalizer; the basis of both the generator and seed derivation.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Deterministic seed derivation tree: every random decision in a run pulls
// from a stream derived as derive_seed(experiment_seed, stream, index).
// Streams are listed in seed_stream below; index disambiguates per-client or
// per-round uses. Identical inputs give identical streams on any platform.
constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream,
                                    std::uint64_t index = 0) {
  std::uint64_t x = mix64(base ^ 0x5851f42d4c957f2dULL);
  x = mix64(x ^ (stream * 0x9e3779b97f4a7c15ULL));
  x = mix64(x ^ (index * 0xd1342543de82ef95ULL));
  return x;
}

namespace seed_stream {
inline constexpr std::uint64_t kSbm = 1;
inline constexpr std::uint64_t kSplit = 2;
inline constexpr std::uint64_t kLouvain = 3;
inline constexpr std::uint64_t kClientInit = 4;
inline constexpr std::uint64_t kServerInit = 5;
inline constexpr std::uint64_t kAnchors = 6;
}  // namespace seed_stream

// Small portable PRNG (splitmix64 stream) with hand-rolled distributions so
// that results are bit-identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t x = state_;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, bound); bound must be positive. Masked rejection
  // sampling: exactly uniform, fewer than two draws expected.
  int uniform_int(int bound) {
    const std::uint64_t b = static_cast<std::uint64_t>(bound);
    std::uint64_t mask = b - 1;
    mask |= mask >> 1;
    mask |= mask >> 2;
    mask |= mask >> 4;
    mask |= mask >> 8;
    mask |= mask >> 16;
    mask |= mask >> 32;
    while (true) {
      const std::uint64_t x = next_u64() & mask;
      if (x < b) return static_cast<int>(x);
    }
  }

  double uniform_range(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box-Muller; the second value of each pair is cached.
  double normal() {
    if (has_cached_) {
      has_cached_ = false;
      return cached_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 6.283185307179586476925286766559 * u2;
    cached_ = r * std::sin(theta);
    has_cached_ = true;
    return r * std::cos(theta);
  }

  bool bernoulli(double p) { return uniform() < p; }

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (int i = static_cast<int>(v.size()) - 1; i > 0; --i) {
      const int j = uniform_int(i + 1);
      std::swap(v[i], v[static_cast<std::size_t>(j)]);
    }
  }

  // First k elements of a random permutation of {0..n-1}, without replacement.
  std::vector<int> sample_without_replacement(int n, int k) {
    std::vector<int> pool(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) pool[static_cast<std::size_t>(i)] = i;
    for (int i = 0; i < k && i < n - 1; ++i) {
      const int j = i + uniform_int(n - i);
      std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(j)]);
    }
    pool.resize(static_cast<std::size_t>(k < n ? k : n));
    return pool;
  }

 private:
  std::uint64_t state_;
  double cached_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace s2fgl
