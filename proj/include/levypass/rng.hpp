#pragma once

#include <cmath>
#include <cstdint>

#include "levypass/common.hpp"

namespace levypass {

// splitmix64, used both as a stream-seeding hash and to expand seeds.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// xoshiro256++ with deterministic splitmix seeding. One instance per Monte
// Carlo path so results do not depend on the worker count.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    std::uint64_t sm = seed;
    for (auto& w : s_) w = splitmix64(sm);
  }

  // Substream for path `index` under a run-level seed.
  static Rng for_path(std::uint64_t seed, std::uint64_t index) {
    std::uint64_t sm = seed ^ (0x9e3779b97f4a7c15ULL * (index + 1));
    return Rng(splitmix64(sm));
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // Uniform on (0, 1); never returns 0 or 1.
  double uniform() {
    const double u = (next_u64() >> 11) * 0x1.0p-53;
    return u > 0.0 ? u : 0x1.0p-53;
  }

  double normal() {
    // Box-Muller; the sine mate is discarded to keep draws positionally
    // deterministic across call sites.
    const double u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
  }

  double exponential(double rate) { return -std::log(uniform()) / rate; }

  // Gamma(shape = m + 1, rate) for integer m: sum of m + 1 exponentials.
  double gamma_int_shape(int m, double rate) {
    double acc = 0.0;
    for (int i = 0; i <= m; ++i) acc += exponential(rate);
    return acc;
  }

  // Inverse Gaussian(mu, lambda), Michael–Schucany–Haas.
  double inverse_gaussian(double mu, double lambda) {
    const double z = normal();
    const double y = z * z;
    const double x1 =
        mu + mu * mu * y / (2.0 * lambda) -
        mu / (2.0 * lambda) * std::sqrt(4.0 * mu * lambda * y + mu * mu * y * y);
    const double u = uniform();
    if (u <= mu / (mu + x1)) return x1;
    return mu * mu / x1;
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }
  std::uint64_t s_[4];
};

}  // namespace levypass
