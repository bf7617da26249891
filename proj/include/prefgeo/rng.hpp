#ifndef PREFGEO_RNG_HPP
#define PREFGEO_RNG_HPP

// Seeded random number generation with library-owned variate transforms.
// The mt19937_64 engine output is pinned by the C++ standard, and all
// distribution transforms below are implemented here, so a given seed
// produces the same stream on every platform and toolchain.

#include <cmath>
#include <cstdint>
#include <random>

#include "prefgeo/common.hpp"

namespace prefgeo {

namespace detail {
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}
}  // namespace detail

class Rng {
 public:
  explicit Rng(std::uint64_t seed)
      : engine_(detail::splitmix64(seed)), seed_base_(seed) {}

  /// Independent generator for a named substream (replicates, chains).
  Rng stream(std::uint64_t idx) const {
    return Rng(detail::splitmix64(seed_base_ ^ (0x5851f42d4c957f2dULL * (idx + 1))));
  }

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n).
  std::uint64_t uniform_int(std::uint64_t n) {
    // Lemire-style rejection to avoid modulo bias.
    std::uint64_t x = engine_();
    __uint128_t m = static_cast<__uint128_t>(x) * n;
    auto lo = static_cast<std::uint64_t>(m);
    if (lo < n) {
      std::uint64_t t = (-n) % n;
      while (lo < t) {
        x = engine_();
        m = static_cast<__uint128_t>(x) * n;
        lo = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  /// Standard normal via Marsaglia polar method (caches the spare deviate).
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    has_spare_ = true;
    return u * f;
  }

  double normal(double mean, double sd) { return mean + sd * normal(); }

  /// Gamma(shape, rate) via Marsaglia–Tsang; mean = shape / rate.
  double gamma(double shape, double rate) {
    require(shape > 0.0 && rate > 0.0, "gamma: shape and rate must be positive");
    if (shape < 1.0) {
      // Boost to shape+1 and scale back.
      double u = uniform();
      while (u == 0.0) u = uniform();
      return gamma(shape + 1.0, rate) * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x, v;
      do {
        x = normal();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      const double u = uniform();
      if (u < 1.0 - 0.0331 * x * x * x * x) return d * v / rate;
      if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v / rate;
    }
  }

  /// Poisson(mean). Inversion by sequential search for small means,
  /// Hormann's transformed rejection (PTRS) otherwise.
  long poisson(double mean) {
    require(mean >= 0.0, "poisson: mean must be nonnegative");
    if (mean == 0.0) return 0;
    if (mean < 30.0) return poisson_knuth(mean);
    return poisson_ptrs(mean);
  }

 private:
  long poisson_knuth(double mean) {
    const double limit = std::exp(-mean);
    long k = 0;
    double prod = uniform();
    while (prod > limit) {
      ++k;
      prod *= uniform();
    }
    return k;
  }

  // W. Hormann (1993), "The transformed rejection method for generating
  // Poisson random variables", algorithm PTRS.
  long poisson_ptrs(double mean) {
    const double smu = std::sqrt(mean);
    const double b = 0.931 + 2.53 * smu;
    const double a = -0.059 + 0.02483 * b;
    const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    const double v_r = 0.9277 - 3.6224 / (b - 2.0);
    const double log_mu = std::log(mean);
    for (;;) {
      double u = uniform() - 0.5;
      double v = uniform();
      double us = 0.5 - std::fabs(u);
      double k = std::floor((2.0 * a / us + b) * u + mean + 0.43);
      if (us >= 0.07 && v <= v_r) return static_cast<long>(k);
      if (k < 0.0 || (us < 0.013 && v > us)) continue;
      if (std::log(v * inv_alpha / (a / (us * us) + b)) <=
          k * log_mu - mean - std::lgamma(k + 1.0)) {
        return static_cast<long>(k);
      }
    }
  }

  std::mt19937_64 engine_;
  std::uint64_t seed_base_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace prefgeo

#endif
