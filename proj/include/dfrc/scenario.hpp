#pragma once

#include "dfrc/common.hpp"
#include "dfrc/geometry.hpp"

#include <stdexcept>
#include <vector>

namespace dfrc {

/// Sensing-side geometry. Powers are the second moments of the cascaded
/// target/clutter coefficients (RCS times two-way gain), linear scale.
struct RadarGeometry {
  AnglePair target;
  std::vector<AnglePair> clutter;
  double target_power = 1.0;       // zeta_0^2
  Vec clutter_powers;              // zeta_q^2, length Q

  int num_clutter() const { return static_cast<int>(clutter.size()); }
};

/// Solver/loop knobs for the whole pipeline.
struct AlgoParams {
  double bcd_tol = 1e-3;        // relative objective change for outer convergence
  int bcd_max_passes = 30;

  int beam_sca_iters = 10;      // W subproblem inner SCA cap
  double beam_sca_tol = 1e-4;   // relative objective change
  int repair_iters = 12;        // power-minimization feasibility repair cap

  double ris_rho_frac = 0.05;   // initial penalty = frac * M
  double ris_tau = 5.0;         // penalty multiplier
  double ris_xi1 = 1e-4;        // inner stop: ||v - v_prev||^2
  double ris_xi2 = 1e-3;        // outer stop: M - ||v||^2
  int ris_inner_cap = 20;
  int ris_outer_cap = 10;

  int pos_sca_iters = 15;       // position SCA cap
  double pos_tol_wavelengths = 1e-4;
  int pos_delta_doublings = 5;  // curvature-bound safeguard
  double pos_qos_skip_margin = 1e-6;

  double solver_tol = 1e-9;     // barrier duality-gap target (relative)
  double solver_feas_tol = 1e-7;
};

/// Full physical description of one scenario, all quantities linear
/// (powers in Watts, distances in meters, angles in radians). dB-scale
/// inputs are converted exactly once, at experiment-spec ingestion.
struct ScenarioConfig {
  int num_users = 3;       // K
  int num_antennas = 8;    // N, transmit and receive arrays alike
  int num_ris = 32;        // M
  int num_paths = 4;       // L

  double wavelength = 0.1;   // m
  double region_size = 0.2;  // A, movement region is [-A/2, A/2]^2
  double min_spacing = 0.05; // D

  double tx_power = 1.0;     // P_t, W
  double qos_floor = 10.0;   // gamma, linear
  double noise_comm = 1e-11; // sigma_k^2, W
  double noise_radar = 1e-11;

  Position2D bs{0.0, 0.0};
  Position2D ris{30.0, 5.0};
  Position2D user_center{30.0, 0.0};
  double user_radius = 3.0;

  double pathloss_ref = 1e-3;   // C0 at 1 m
  double alpha_bs_ris = 2.4;
  double alpha_ris_user = 2.8;
  double alpha_bs_target = 2.6;

  RadarGeometry radar;
  AlgoParams algo;

  void validate() const {
    if (num_users < 1 || num_antennas < 1 || num_ris < 1 || num_paths < 1)
      throw std::invalid_argument("array dimensions must be positive");
    if (radar.num_clutter() != radar.clutter_powers.size())
      throw std::invalid_argument("clutter angle/power count mismatch");
    if (wavelength <= 0 || region_size <= 0 || min_spacing <= 0)
      throw std::invalid_argument("geometry lengths must be positive");
    if (min_spacing > region_size)
      throw std::invalid_argument("min spacing exceeds region size");
    if (noise_comm <= 0 || noise_radar <= 0)
      throw std::invalid_argument("noise powers must be positive");
    const double d_br = std::hypot(bs.x - ris.x, bs.y - ris.y);
    if (d_br <= 0) throw std::invalid_argument("BS and RIS must be separated");
  }

  double bs_ris_distance() const { return std::hypot(bs.x - ris.x, bs.y - ris.y); }
};

/// Cascaded second moment of a sensing coefficient: RCS scaled by the
/// path gain at the stated distance and exponent.
inline double sensing_power(double rcs, double ref_gain, double distance, double alpha) {
  return rcs * ref_gain * std::pow(distance, -alpha);
}

namespace detail {

inline RadarGeometry default_radar(double pathloss_ref, double alpha_bs_target) {
  RadarGeometry r;
  r.target = {deg_to_rad(30.0), deg_to_rad(45.0)};
  r.clutter = {{deg_to_rad(120.0), deg_to_rad(90.0)}, {deg_to_rad(135.0), deg_to_rad(60.0)}};
  r.target_power = sensing_power(1.0, pathloss_ref, 40.0, alpha_bs_target);
  r.clutter_powers = Vec::Constant(2, sensing_power(1.0, pathloss_ref, 40.0, alpha_bs_target));
  return r;
}

}  // namespace detail

/// Full-scale scenario: K=3, N=8, M=32, Q=2 with the default link geometry.
inline ScenarioConfig make_paper_scenario() {
  ScenarioConfig c;
  c.radar = detail::default_radar(c.pathloss_ref, c.alpha_bs_target);
  c.validate();
  return c;
}

/// Reduced scenario for fast experiments: K=2, N=4, M=16, Q=2. The link
/// geometry is pulled in so the smaller arrays still close the QoS budget.
inline ScenarioConfig make_desk_scenario() {
  ScenarioConfig c;
  c.num_users = 2;
  c.num_antennas = 4;
  c.num_ris = 16;
  c.ris = {10.0, 2.0};
  c.user_center = {10.0, 0.0};
  c.user_radius = 1.5;
  c.radar = detail::default_radar(c.pathloss_ref, c.alpha_bs_target);
  c.validate();
  return c;
}

}  // namespace dfrc
