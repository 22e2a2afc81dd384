#pragma once

#include "dfrc/common.hpp"

#include <span>
#include <stdexcept>
#include <vector>

namespace dfrc {

/// A point in a planar antenna/RIS region, coordinates in meters.
struct Position2D {
  double x = 0.0;
  double y = 0.0;
};

/// Elevation/azimuth pair of one propagation path, radians in [0, pi].
struct AnglePair {
  double elevation = 0.0;
  double azimuth = 0.0;
};

/// One elevation/azimuth pair per path on one side of a link.
using PathAngles = std::vector<AnglePair>;

/// Stacked-coordinate layout [x1, y1, x2, y2, ...] used for the movable
/// antenna position vectors.
inline Vec stack_positions(std::span<const Position2D> pts) {
  Vec out(2 * static_cast<Eigen::Index>(pts.size()));
  for (std::size_t n = 0; n < pts.size(); ++n) {
    out(2 * n) = pts[n].x;
    out(2 * n + 1) = pts[n].y;
  }
  return out;
}

inline std::vector<Position2D> unstack_positions(const Vec& stacked) {
  std::vector<Position2D> out(static_cast<std::size_t>(stacked.size() / 2));
  for (std::size_t n = 0; n < out.size(); ++n) {
    out[n] = {stacked(2 * n), stacked(2 * n + 1)};
  }
  return out;
}

/// Signal propagation difference between an element at `pos` and the
/// region's reference point, for a path arriving/departing at `angles`:
///   x sin(elev) cos(azim) + y cos(elev).
inline double propagation_diff(Position2D pos, AnglePair angles) {
  return pos.x * std::sin(angles.elevation) * std::cos(angles.azimuth) +
         pos.y * std::cos(angles.elevation);
}

/// Directional derivative factors of propagation_diff: d/dx and d/dy.
inline Position2D propagation_diff_grad(AnglePair angles) {
  return {std::sin(angles.elevation) * std::cos(angles.azimuth),
          std::cos(angles.elevation)};
}

/// Field response vector of one element: entry j = exp(i 2pi/lambda * rho_j).
inline CVec field_response_vector(Position2D pos, const PathAngles& angles,
                                  double wavelength) {
  if (wavelength <= 0.0) throw std::invalid_argument("wavelength must be positive");
  const double k = 2.0 * kPi / wavelength;
  CVec out(static_cast<Eigen::Index>(angles.size()));
  for (std::size_t j = 0; j < angles.size(); ++j) {
    const double phase = k * propagation_diff(pos, angles[j]);
    out(j) = Complex{std::cos(phase), std::sin(phase)};
  }
  return out;
}

/// Field response matrix: L x P, column p is the FRV of element p.
inline CMat field_response_matrix(std::span<const Position2D> positions,
                                  const PathAngles& angles, double wavelength) {
  CMat out(static_cast<Eigen::Index>(angles.size()),
           static_cast<Eigen::Index>(positions.size()));
  for (std::size_t p = 0; p < positions.size(); ++p) {
    out.col(p) = field_response_vector(positions[p], angles, wavelength);
  }
  return out;
}

/// Steering vector of an array toward a single direction; entry n is the
/// unit-modulus phase response of antenna n at its current position.
inline CVec steering_vector(const Vec& stacked, AnglePair angles, double wavelength) {
  if (wavelength <= 0.0) throw std::invalid_argument("wavelength must be positive");
  const double k = 2.0 * kPi / wavelength;
  const Eigen::Index n_ant = stacked.size() / 2;
  CVec out(n_ant);
  for (Eigen::Index n = 0; n < n_ant; ++n) {
    const double phase =
        k * propagation_diff({stacked(2 * n), stacked(2 * n + 1)}, angles);
    out(n) = Complex{std::cos(phase), std::sin(phase)};
  }
  return out;
}

/// Rank-1 target/clutter response matrix a_r(angles) a_t(angles)^H.
inline CMat radar_response_matrix(const Vec& rx_positions, const Vec& tx_positions,
                                  AnglePair angles, double wavelength) {
  const CVec ar = steering_vector(rx_positions, angles, wavelength);
  const CVec at = steering_vector(tx_positions, angles, wavelength);
  return ar * at.adjoint();
}

/// Near-square factorization rows x cols with rows <= cols and rows*cols = n.
inline std::pair<int, int> near_square_grid(int n) {
  int rows = static_cast<int>(std::sqrt(static_cast<double>(n)));
  while (rows > 1 && n % rows != 0) --rows;
  return {rows, n / rows};
}

/// Half-wavelength-spaced planar grid of `count` elements centered on the
/// region reference point. Used for the fixed RIS layout and the FPA and
/// initial MA layouts.
inline std::vector<Position2D> grid_layout(int count, double wavelength) {
  const auto [rows, cols] = near_square_grid(count);
  const double d = wavelength / 2.0;
  std::vector<Position2D> out;
  out.reserve(count);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      // larger factor along x
      out.push_back({(c - (cols - 1) / 2.0) * d, (r - (rows - 1) / 2.0) * d});
    }
  }
  return out;
}

inline double min_pairwise_distance(const Vec& stacked) {
  const Eigen::Index n = stacked.size() / 2;
  double best = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double dx = stacked(2 * i) - stacked(2 * j);
      const double dy = stacked(2 * i + 1) - stacked(2 * j + 1);
      best = std::min(best, std::hypot(dx, dy));
    }
  }
  return best;
}

}  // namespace dfrc
