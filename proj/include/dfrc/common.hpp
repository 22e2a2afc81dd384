#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <numbers>
#include <string>
#include <string_view>

namespace dfrc {

inline constexpr std::string_view kVersion = "0.1.0";

using Complex = std::complex<double>;
using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;

inline constexpr double kPi = std::numbers::pi;
inline constexpr Complex kImag{0.0, 1.0};

/// dB <-> linear power ratio.
inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double lin) { return 10.0 * std::log10(lin); }

/// dBm -> Watts.
inline double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }
inline double watts_to_dbm(double w) { return 10.0 * std::log10(w) + 30.0; }

inline double deg_to_rad(double deg) { return deg * kPi / 180.0; }

/// Scale a complex number onto the unit circle such that the final
/// |z| evaluates to 1.0 in double precision (|z/|z|| can land one ulp
/// off; re-normalizing reaches the fixed point in a step or two).
inline Complex unit_normalize(Complex z) {
  double m = std::abs(z);
  if (m == 0.0) return Complex{1.0, 0.0};
  for (int i = 0; i < 8 && m != 1.0; ++i) {
    z /= m;
    m = std::abs(z);
  }
  return z;
}

/// FNV-1a 64-bit, used to derive RNG substreams and to stamp output files.
inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace dfrc
