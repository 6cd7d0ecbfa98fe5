#pragma once

#include <cstdint>
#include <random>

namespace qkdplan {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed for run `index` of a batch started from `base`.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
  return splitmix64(base ^ index);
}

/// Thin wrapper over mt19937_64 with distribution code written out so the
/// stream is identical across standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

  std::uint64_t next() { return engine_(); }
  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  bool bernoulli(double p) { return uniform() < p; }
  std::uint8_t bit() { return static_cast<std::uint8_t>(engine_() >> 63); }
  /// Uniform integer in [0, n), rejection sampled.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % n;
  }

 private:
  std::mt19937_64 engine_;
};

/// Independent stream for a named stage of one run.
enum class Stream : std::uint64_t {
  Quantum = 1,
  Randomization = 2,
  Estimation = 3,
  Reconciliation = 4,
  Extraction = 5,
};

inline std::uint64_t stream_seed(std::uint64_t run_seed, Stream s) {
  return splitmix64(run_seed + 0x632be59bd9b4e019ULL * static_cast<std::uint64_t>(s));
}

}  // namespace qkdplan
