#pragma once

#include <cmath>
#include <cstdint>

namespace qbr {

// Deterministic, platform-independent random streams for the coverage
// harness. Standard-library distributions are implementation-defined, so the
// generator and every sampler are spelled out here; results depend only on
// (seed, stream index), never on worker count or architecture.

namespace detail {

inline uint64_t splitmix64(uint64_t& state) {
  uint64_t z = (state += 0x9E3779B97F4A7C15ull);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

inline uint64_t rotl(uint64_t x, int k) {
  return (x << k) | (x >> (64 - k));
}

}  // namespace detail

// xoshiro256++ with SplitMix64 state expansion.
class RandomStream {
 public:
  RandomStream(uint64_t seed, uint64_t stream) {
    uint64_t sm = seed;
    detail::splitmix64(sm);
    sm ^= 0xD1B54A32D192ED03ull * (stream + 1);
    for (auto& word : s_) word = detail::splitmix64(sm);
  }

  uint64_t next_u64() {
    uint64_t result = detail::rotl(s_[0] + s_[3], 23) + s_[0];
    uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = detail::rotl(s_[3], 45);
    return result;
  }

  // Uniform on the open interval (0, 1): 53-bit mantissa offset by half an
  // ulp so logarithms stay finite.
  double uniform() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double exponential(double rate) { return -std::log(uniform()) / rate; }

  // Box-Muller pair, second value cached.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 6.28318530717958647692 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  // Marsaglia-Tsang squeeze for shape >= 1, with the standard power boost
  // below 1. Unit scale.
  double gamma(double shape) {
    if (shape < 1.0) {
      double boost = std::pow(uniform(), 1.0 / shape);
      return boost * gamma(shape + 1.0);
    }
    double d = shape - 1.0 / 3.0;
    double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x = normal();
      double t = 1.0 + c * x;
      if (t <= 0.0) continue;
      double v = t * t * t;
      double u = uniform();
      double x2 = x * x;
      if (u < 1.0 - 0.0331 * x2 * x2) return d * v;
      if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v;
    }
  }

  double beta(double a, double b) {
    double x = gamma(a);
    double y = gamma(b);
    return x / (x + y);
  }

  double chisq(double df) { return 2.0 * gamma(0.5 * df); }

  double student_t(double nu) {
    return normal() / std::sqrt(chisq(nu) / nu);
  }

 private:
  uint64_t s_[4];
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace qbr
