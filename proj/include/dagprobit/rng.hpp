#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "dagprobit/errors.hpp"
#include "dagprobit/stats.hpp"

namespace dagprobit {

// splitmix64 step; used to derive well-separated substream seeds.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  std::uint64_t s = master ^ (0x6a09e667f3bcc909ULL + stream * 0x9e3779b97f4a7c15ULL);
  splitmix64(s);
  return splitmix64(s);
}

// All draws are built from the raw mt19937_64 stream through fixed
// transformations, so a (seed, call sequence) pair pins every output bit.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on the open interval (0,1).
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53 + 0x1.0p-54;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Index uniform on {0, ..., n-1} by rejection, bias-free.
  std::size_t uniform_index(std::size_t n) {
    if (n == 0) throw ValidationError("uniform_index: empty range");
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t draw;
    do {
      draw = engine_();
    } while (draw >= limit);
    return static_cast<std::size_t>(draw % n);
  }

  double normal() { return norm_quantile(uniform()); }

  double normal(double mean, double sd) { return mean + sd * normal(); }

  // Marsaglia-Tsang; shape > 0, unit scale.
  double gamma(double shape) {
    if (!(shape > 0.0)) throw ValidationError("gamma: shape must be positive");
    if (shape < 1.0) {
      const double boost = std::pow(uniform(), 1.0 / shape);
      return boost * gamma(shape + 1.0);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x;
      double v;
      do {
        x = normal();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      const double u = uniform();
      if (std::log(u) < 0.5 * x * x + d - d * v + d * std::log(v)) return d * v;
    }
  }

  // Inverse gamma with shape alpha and rate beta (mean beta/(alpha-1)).
  double inverse_gamma(double shape, double rate) {
    if (!(shape > 0.0) || !(rate > 0.0))
      throw ValidationError("inverse_gamma: shape and rate must be positive");
    return rate / gamma(shape);
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace dagprobit
