#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace topotrack {

/// Deterministic random source. All distributions are implemented on top of
/// the raw 64-bit stream, so identical seeds give identical values on every
/// platform and across runs.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const { return seed_; }

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1) with 53 bits of precision.
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform index in [0, n). n must be positive.
  std::size_t uniform_index(std::size_t n) {
    return static_cast<std::size_t>(next_u64() % n);
  }

  bool bernoulli(double p) { return uniform() < p; }

  /// Standard normal via Box-Muller. Draws two uniforms per value; the sine
  /// partner is discarded so the stream layout stays trivially predictable.
  double normal() {
    double u1 = 1.0 - uniform();  // (0, 1]
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.28318530717958647692 * u2);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

}  // namespace topotrack
