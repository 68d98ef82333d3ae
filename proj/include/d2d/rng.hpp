#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace d2d {

// Deterministic random source. All sampling algorithms are implemented here
// rather than via std::*_distribution so that output is bit-identical across
// standard libraries and across runs, which the reproducibility contracts
// depend on.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(expand_seed(seed)) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform double in [0, 1), 53-bit resolution.
  double next_double() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, n), unbiased via rejection.
  std::uint64_t uniform_below(std::uint64_t n) {
    if (n == 0) return 0;
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n + 1) % n;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x > limit);
    return x % n;
  }

  bool bernoulli(double p) { return next_double() < p; }

  // Knuth multiplication method for moderate rates, normal approximation for
  // large ones. Deterministic in both regimes.
  std::uint64_t poisson(double lambda) {
    if (lambda <= 0.0) return 0;
    if (lambda < 64.0) {
      const double limit = std::exp(-lambda);
      std::uint64_t k = 0;
      double prod = next_double();
      while (prod > limit) {
        ++k;
        prod *= next_double();
      }
      return k;
    }
    const double x = lambda + std::sqrt(lambda) * gaussian();
    return x <= 0.0 ? 0 : static_cast<std::uint64_t>(std::llround(x));
  }

  // Box-Muller without spare caching, so the draw count per call is fixed.
  double gaussian() {
    double u1 = next_double();
    while (u1 <= 0.0) u1 = next_double();
    const double u2 = next_double();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.141592653589793238 * u2);
  }

  // Derived substream seed; used to give parallel units independent streams
  // whose output does not depend on scheduling.
  static std::uint64_t mix(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  static std::mt19937_64 expand_seed(std::uint64_t seed) {
    return std::mt19937_64(mix(seed, 0));
  }

  std::mt19937_64 engine_;
};

}  // namespace d2d
