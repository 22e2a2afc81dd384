#pragma once

#include "dfrc/geometry.hpp"
#include "dfrc/rng.hpp"
#include "dfrc/scenario.hpp"

#include <stdexcept>
#include <vector>

namespace dfrc {

/// H = F^H Sigma G, with Sigma the diagonal path response matrix.
inline CMat assemble_bs_ris_channel(const CMat& ris_frm, const CVec& path_gains,
                                    const CMat& bs_frm) {
  if (ris_frm.rows() != path_gains.size() || bs_frm.rows() != path_gains.size())
    throw std::invalid_argument("path count mismatch in channel assembly");
  return ris_frm.adjoint() * path_gains.asDiagonal() * bs_frm;
}

/// RIS->user channel h_k = F_k^H Sigma_k 1_L; the single fixed user antenna
/// sits at its own reference point, so its field response is all-ones.
inline CVec user_channel(const CMat& ris_frm_user, const CVec& path_gains) {
  if (ris_frm_user.rows() != path_gains.size())
    throw std::invalid_argument("path count mismatch in user channel");
  return ris_frm_user.adjoint() * path_gains;
}

/// One realization of every random channel quantity plus the pieces that
/// depend on the current transmit antenna positions. The RIS element grid
/// is fixed; only G (and hence H) changes when t moves.
struct ChannelState {
  int num_paths = 0;
  double wavelength = 0.0;

  PathAngles bs_angles;                   // BS side of the BS-RIS link
  PathAngles ris_angles;                  // RIS side of the BS-RIS link
  std::vector<PathAngles> user_angles;    // RIS side of each RIS-user link

  CVec bs_ris_gains;                      // diag of Sigma
  std::vector<CVec> user_gains;           // diag of Sigma_k

  std::vector<Position2D> ris_grid;       // fixed lambda/2 element layout
  CMat ris_frm;                           // F, L x M
  std::vector<CVec> user_channels;        // h_k, M

  std::vector<Position2D> user_positions; // realized user drops (scene plane)

  CMat bs_frm;                            // G(t), L x N
  CMat bs_ris;                            // H(t), M x N

  /// Rebuild the t-dependent blocks after a transmit position change.
  void refresh(const Vec& tx_positions) {
    const auto pts = unstack_positions(tx_positions);
    bs_frm = field_response_matrix(pts, bs_angles, wavelength);
    bs_ris = assemble_bs_ris_channel(ris_frm, bs_ris_gains, bs_frm);
  }
};

/// Draw every random quantity of one trial: path angles uniform on [0, pi],
/// user drops uniform over the disc, and path gains CN(0, C0 d^-alpha / L).
/// The draw order is fixed, so a seed pins the state bit-for-bit.
inline ChannelState sample_channels(Rng& rng, const ScenarioConfig& cfg) {
  ChannelState cs;
  cs.num_paths = cfg.num_paths;
  cs.wavelength = cfg.wavelength;

  auto draw_angles = [&rng, &cfg]() {
    PathAngles a(cfg.num_paths);
    for (auto& p : a) {
      p.elevation = rng.uniform(0.0, kPi);
      p.azimuth = rng.uniform(0.0, kPi);
    }
    return a;
  };

  cs.bs_angles = draw_angles();
  cs.ris_angles = draw_angles();
  cs.user_angles.resize(cfg.num_users);
  for (auto& ua : cs.user_angles) ua = draw_angles();

  cs.user_positions.resize(cfg.num_users);
  for (auto& up : cs.user_positions) {
    const double r = cfg.user_radius * std::sqrt(rng.uniform01());
    const double th = rng.uniform(0.0, 2.0 * kPi);
    up = {cfg.user_center.x + r * std::cos(th), cfg.user_center.y + r * std::sin(th)};
  }

  const double var_bs_ris =
      cfg.pathloss_ref * std::pow(cfg.bs_ris_distance(), -cfg.alpha_bs_ris) / cfg.num_paths;
  cs.bs_ris_gains = CVec(cfg.num_paths);
  for (int l = 0; l < cfg.num_paths; ++l) cs.bs_ris_gains(l) = rng.cgauss(var_bs_ris);

  cs.user_gains.resize(cfg.num_users);
  for (int k = 0; k < cfg.num_users; ++k) {
    const double d =
        std::hypot(cfg.ris.x - cs.user_positions[k].x, cfg.ris.y - cs.user_positions[k].y);
    const double var = cfg.pathloss_ref * std::pow(d, -cfg.alpha_ris_user) / cfg.num_paths;
    cs.user_gains[k] = CVec(cfg.num_paths);
    for (int l = 0; l < cfg.num_paths; ++l) cs.user_gains[k](l) = rng.cgauss(var);
  }

  cs.ris_grid = grid_layout(cfg.num_ris, cfg.wavelength);
  cs.ris_frm = field_response_matrix(cs.ris_grid, cs.ris_angles, cfg.wavelength);

  cs.user_channels.resize(cfg.num_users);
  for (int k = 0; k < cfg.num_users; ++k) {
    const CMat frm_k = field_response_matrix(cs.ris_grid, cs.user_angles[k], cfg.wavelength);
    cs.user_channels[k] = user_channel(frm_k, cs.user_gains[k]);
  }

  const auto initial = grid_layout(cfg.num_antennas, cfg.wavelength);
  cs.refresh(stack_positions(initial));
  return cs;
}

}  // namespace dfrc
