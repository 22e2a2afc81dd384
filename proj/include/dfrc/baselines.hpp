#pragma once

#include "dfrc/positions.hpp"
#include "dfrc/rng.hpp"

#include <stdexcept>
#include <string>
#include <vector>

namespace dfrc {

enum class SchemeTag { proposed, fpa, rpa, random_ris, gas };

inline std::string to_string(SchemeTag s) {
  switch (s) {
    case SchemeTag::proposed: return "proposed";
    case SchemeTag::fpa: return "fpa";
    case SchemeTag::rpa: return "rpa";
    case SchemeTag::random_ris: return "random_ris";
    case SchemeTag::gas: return "gas";
  }
  return "?";
}

inline SchemeTag scheme_from_string(const std::string& s) {
  if (s == "proposed") return SchemeTag::proposed;
  if (s == "fpa") return SchemeTag::fpa;
  if (s == "rpa") return SchemeTag::rpa;
  if (s == "random_ris") return SchemeTag::random_ris;
  if (s == "gas") return SchemeTag::gas;
  throw std::invalid_argument("unknown scheme: " + s);
}

/// Fixed half-wavelength grid centered in the region.
inline Vec fpa_layout(int n, double wavelength, double region_size) {
  const auto pts = grid_layout(n, wavelength);
  for (const auto& p : pts) {
    if (std::abs(p.x) > region_size / 2.0 + 1e-12 || std::abs(p.y) > region_size / 2.0 + 1e-12)
      throw std::invalid_argument("FPA grid exceeds the movement region");
  }
  return stack_positions(pts);
}

/// Rejection-sampled random layout honoring the minimum spacing.
inline Vec rpa_layout(int n, double region_size, double min_dist, Rng& rng) {
  const double half = region_size / 2.0;
  std::vector<Position2D> placed;
  long rejections = 0;
  while (static_cast<int>(placed.size()) < n) {
    const Position2D cand{rng.uniform(-half, half), rng.uniform(-half, half)};
    bool ok = true;
    for (const auto& p : placed) {
      if (std::hypot(cand.x - p.x, cand.y - p.y) < min_dist) {
        ok = false;
        break;
      }
    }
    if (ok) {
      placed.push_back(cand);
    } else if (++rejections > 10000) {
      throw std::runtime_error("random layout rejected too often; region too tight");
    }
  }
  return stack_positions(placed);
}

/// Uniform random phase shifts.
inline CVec random_ris(int m, Rng& rng) {
  CVec v(m);
  for (int i = 0; i < m; ++i) v(i) = rng.unit_phase();
  return v;
}

/// Half-wavelength site lattice covering the movement region.
inline std::vector<Position2D> gas_site_grid(double region_size, double wavelength) {
  const double step = wavelength / 2.0;
  const int per_axis = static_cast<int>(std::floor(region_size / step)) + 1;
  const double start = -step * (per_axis - 1) / 2.0;
  std::vector<Position2D> sites;
  sites.reserve(per_axis * per_axis);
  for (int iy = 0; iy < per_axis; ++iy)
    for (int ix = 0; ix < per_axis; ++ix)
      sites.push_back({start + ix * step, start + iy * step});
  return sites;
}

namespace gas_detail {

/// Zero the factor entries of antennas that are not yet placed: masking a
/// row of W (transmit) or Lambda (receive) zeroes the matching entry of the
/// linear factor and the matching row/column of the quadratic factor.
inline ObjectiveFactors mask_factors(const ObjectiveFactors& f,
                                     const std::vector<bool>& placed) {
  ObjectiveFactors out = f;
  for (std::size_t i = 0; i < placed.size(); ++i) {
    if (!placed[i]) {
      out.linear(i) = Complex{0.0, 0.0};
      out.quad.row(i).setZero();
      out.quad.col(i).setZero();
    }
  }
  return out;
}

}  // namespace gas_detail

struct GasResult {
  Vec positions;
  double objective = 0.0;
};

/// Greedy forward selection over the site lattice: antennas are placed one
/// at a time on the vacant site that maximizes the position objective of
/// the partial array, unplaced antennas contributing nothing.
inline GasResult gas_positions(const ObjectiveFactors& factors, const RadarGeometry& radar,
                               double wavelength, int n_antennas, double region_size,
                               double min_dist) {
  const auto sites = gas_site_grid(region_size, wavelength);
  if (static_cast<int>(sites.size()) < n_antennas)
    throw std::runtime_error("fewer lattice sites than antennas");

  std::vector<bool> site_used(sites.size(), false);
  std::vector<bool> placed(n_antennas, false);
  Vec pos = Vec::Zero(2 * n_antennas);

  for (int a = 0; a < n_antennas; ++a) {
    placed[a] = true;
    const ObjectiveFactors masked = gas_detail::mask_factors(factors, placed);
    double best = -std::numeric_limits<double>::infinity();
    int best_site = -1;
    for (std::size_t s = 0; s < sites.size(); ++s) {
      if (site_used[s]) continue;
      bool ok = true;
      for (int b = 0; b < a; ++b) {
        const double d = std::hypot(sites[s].x - pos(2 * b), sites[s].y - pos(2 * b + 1));
        if (d < min_dist - 1e-12) {
          ok = false;
          break;
        }
      }
      if (!ok) continue;
      pos(2 * a) = sites[s].x;
      pos(2 * a + 1) = sites[s].y;
      const double val = position_objective(pos, masked, radar, wavelength);
      if (val > best) {
        best = val;
        best_site = static_cast<int>(s);
      }
    }
    if (best_site < 0) throw std::runtime_error("no feasible site for antenna placement");
    site_used[best_site] = true;
    pos(2 * a) = sites[best_site].x;
    pos(2 * a + 1) = sites[best_site].y;
  }

  GasResult res;
  res.positions = pos;
  res.objective = position_objective(pos, factors, radar, wavelength);
  return res;
}

}  // namespace dfrc
