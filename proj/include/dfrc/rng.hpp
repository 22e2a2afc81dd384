#pragma once

#include "dfrc/common.hpp"

#include <cstdint>
#include <random>
#include <string_view>

namespace dfrc {

/// Deterministic random stream. Distribution sampling is implemented on
/// top of the raw mt19937_64 output so that identical seeds reproduce
/// identical draws independently of the standard library in use.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed), seed_mix_(seed) {}

  /// Independent substream, e.g. for per-scheme randomness that must not
  /// perturb the shared channel draw of a trial.
  Rng fork(std::string_view tag) const {
    return Rng(seed_mix_ ^ fnv1a64(tag));
  }

  std::uint64_t raw() { return gen_(); }

  /// Uniform on [0, 1).
  double uniform01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  /// Standard normal via Box-Muller; the spare draw is cached.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    // u1 in (0, 1] keeps the log finite.
    const double u1 = (static_cast<double>(gen_() >> 11) + 1.0) * 0x1.0p-53;
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * kPi * u2);
    have_spare_ = true;
    return r * std::cos(2.0 * kPi * u2);
  }

  /// Circularly-symmetric complex Gaussian with E|z|^2 = variance.
  Complex cgauss(double variance) {
    const double s = std::sqrt(variance / 2.0);
    const double re = s * normal();
    const double im = s * normal();
    return {re, im};
  }

  /// Unit-modulus value with phase uniform on [0, 2pi).
  Complex unit_phase() {
    const double theta = uniform(0.0, 2.0 * kPi);
    return unit_normalize(Complex{std::cos(theta), std::sin(theta)});
  }

 private:
  std::mt19937_64 gen_;
  std::uint64_t seed_mix_ = 0;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace dfrc
