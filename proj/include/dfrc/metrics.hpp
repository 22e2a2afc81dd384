#pragma once

#include "dfrc/channel.hpp"
#include "dfrc/scenario.hpp"

#include <Eigen/Cholesky>

#include <stdexcept>

namespace dfrc {

/// All optimization blocks of one trial. The receive filter is folded into
/// the trace-form radar SINR analytically and is materialized on demand
/// only (see mvdr_filter).
struct DesignVariables {
  CMat beams;         // W, N x K
  CVec ris;           // reflection coefficients v_m = e^{j theta_m}, M
  Vec tx_positions;   // 2N stacked
  Vec rx_positions;   // 2N stacked
  CMat aux;           // Lambda, N x K
};

/// Effective BS->user vector e_k with e_k^H w = h_k^H V H w.
inline CVec effective_user_channel(int k, const ChannelState& cs, const CVec& ris) {
  const CVec row = cs.user_channels[k].conjugate().cwiseProduct(ris);
  return (row.transpose() * cs.bs_ris).adjoint();
}

inline double interference_plus_noise(int k, const CMat& beams, const CVec& eff_k,
                                      double noise) {
  double acc = noise;
  for (Eigen::Index j = 0; j < beams.cols(); ++j) {
    if (j == k) continue;
    acc += std::norm(eff_k.dot(beams.col(j)));
  }
  return acc;
}

/// Downlink SINR of user k (Gamma_k).
inline double comm_sinr(int k, const CMat& beams, const CVec& ris,
                        const ChannelState& cs, double noise) {
  const CVec eff = effective_user_channel(k, cs, ris);
  const double sig = std::norm(eff.dot(beams.col(k)));
  return sig / interference_plus_noise(k, beams, eff, noise);
}

inline double min_comm_sinr(const CMat& beams, const CVec& ris, const ChannelState& cs,
                            double noise) {
  double best = std::numeric_limits<double>::infinity();
  for (Eigen::Index k = 0; k < beams.cols(); ++k)
    best = std::min(best, comm_sinr(static_cast<int>(k), beams, ris, cs, noise));
  return best;
}

/// Clutter covariance Xi = sum_q zeta_q^2 A_q W W^H A_q^H.
inline CMat clutter_covariance(const CMat& beams, const Vec& rx_positions,
                               const Vec& tx_positions, const RadarGeometry& radar,
                               double wavelength) {
  const Eigen::Index n = beams.rows();
  CMat xi = CMat::Zero(n, n);
  for (int q = 0; q < radar.num_clutter(); ++q) {
    const CVec ar = steering_vector(rx_positions, radar.clutter[q], wavelength);
    const CVec at = steering_vector(tx_positions, radar.clutter[q], wavelength);
    // A_q W = ar (at^H W): rank-1, so accumulate through the K-vector.
    const CVec atw = (at.adjoint() * beams).adjoint();
    xi += (radar.clutter_powers(q) * atw.squaredNorm()) * (ar * ar.adjoint());
  }
  return xi;
}

namespace detail {

inline Eigen::LLT<CMat> noise_plus_clutter_llt(const CMat& beams, const Vec& rx_positions,
                                               const Vec& tx_positions,
                                               const RadarGeometry& radar,
                                               double wavelength, double noise_radar) {
  CMat m = clutter_covariance(beams, rx_positions, tx_positions, radar, wavelength);
  m.diagonal().array() += noise_radar;
  Eigen::LLT<CMat> llt(m);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("clutter-plus-noise covariance not positive definite");
  return llt;
}

}  // namespace detail

/// MVDR receive filter for a given transmit snapshot x (beta = 1):
/// u = (Xi + sigma_r^2 I)^{-1} A_0 x.
inline CVec mvdr_filter(const CMat& beams, const Vec& rx_positions, const Vec& tx_positions,
                        const RadarGeometry& radar, double wavelength, double noise_radar,
                        const CVec& snapshot) {
  if (noise_radar <= 0.0) throw std::invalid_argument("radar noise must be positive");
  const auto llt = detail::noise_plus_clutter_llt(beams, rx_positions, tx_positions, radar,
                                                  wavelength, noise_radar);
  const CVec a0x = radar_response_matrix(rx_positions, tx_positions, radar.target, wavelength) *
                   snapshot;
  return llt.solve(a0x);
}

/// Radar SINR for an explicit filter and snapshot (the ratio form).
inline double radar_sinr_with_filter(const CVec& filter, const CVec& snapshot,
                                     const CMat& beams, const Vec& rx_positions,
                                     const Vec& tx_positions, const RadarGeometry& radar,
                                     double wavelength, double noise_radar) {
  CMat denom = clutter_covariance(beams, rx_positions, tx_positions, radar, wavelength);
  denom.diagonal().array() += noise_radar;
  const CMat a0 = radar_response_matrix(rx_positions, tx_positions, radar.target, wavelength);
  const double num = radar.target_power * std::norm(filter.dot(a0 * snapshot));
  return num / std::real(filter.dot(denom * filter));
}

/// Trace-form radar SINR: tr(Phi W W^H), Phi = zeta_0^2 A_0^H (Xi + s I)^{-1} A_0.
inline double radar_sinr(const CMat& beams, const Vec& rx_positions, const Vec& tx_positions,
                         const RadarGeometry& radar, double wavelength, double noise_radar) {
  if (noise_radar <= 0.0) throw std::invalid_argument("radar noise must be positive");
  const auto llt = detail::noise_plus_clutter_llt(beams, rx_positions, tx_positions, radar,
                                                  wavelength, noise_radar);
  const CMat a0w =
      radar_response_matrix(rx_positions, tx_positions, radar.target, wavelength) * beams;
  const CMat solved = llt.solve(a0w);
  return radar.target_power * std::real((a0w.adjoint() * solved).trace());
}

/// Fractional-programming surrogate of the radar SINR:
/// zeta_0^2 tr(2 Re{W^H A_0^H Lambda} - Lambda^H (Xi + s I) Lambda).
inline double fp_objective(const CMat& beams, const Vec& rx_positions, const Vec& tx_positions,
                           const CMat& aux, const RadarGeometry& radar, double wavelength,
                           double noise_radar) {
  const CMat a0 = radar_response_matrix(rx_positions, tx_positions, radar.target, wavelength);
  CMat xi = clutter_covariance(beams, rx_positions, tx_positions, radar, wavelength);
  xi.diagonal().array() += noise_radar;
  const double cross = 2.0 * std::real((beams.adjoint() * a0.adjoint() * aux).trace());
  const double quad = std::real((aux.adjoint() * xi * aux).trace());
  return radar.target_power * (cross - quad);
}

/// Closed-form maximizer of the FP surrogate over the auxiliary block:
/// Lambda* = (Xi + s I)^{-1} A_0 W. At this point the surrogate equals the
/// trace-form radar SINR.
inline CMat optimal_aux(const CMat& beams, const Vec& rx_positions, const Vec& tx_positions,
                        const RadarGeometry& radar, double wavelength, double noise_radar) {
  const auto llt = detail::noise_plus_clutter_llt(beams, rx_positions, tx_positions, radar,
                                                  wavelength, noise_radar);
  const CMat a0w =
      radar_response_matrix(rx_positions, tx_positions, radar.target, wavelength) * beams;
  return llt.solve(a0w);
}

}  // namespace dfrc
