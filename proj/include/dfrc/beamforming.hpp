#pragma once

#include "dfrc/metrics.hpp"
#include "dfrc/qcqp.hpp"

#include <vector>

namespace dfrc {

/// Rank-1 effective-channel quadratic of user k over beam space:
/// H_k = e_k e_k^H with e_k^H w = h_k^H V H w.
inline CMat qos_quadratic(int k, const ChannelState& cs, const CVec& ris) {
  const CVec e = effective_user_channel(k, cs, ris);
  return e * e.adjoint();
}

namespace beam_detail {

/// Place a per-user 2n x 2n real block into the stacked-beam matrix.
inline void add_user_block(Mat& big, int user, const Mat& block) {
  const int w = static_cast<int>(block.rows());
  big.block(user * w, user * w, w, w) += block;
}

}  // namespace beam_detail

/// First-order under-estimator of user k's QoS at expansion point W^l,
/// emitted over the lifted stacked beams [w_1; ...; w_K] as
///   gamma sum_{j!=k} w_j^H Hk w_j - 2Re{(Hk w_k^l)^H w_k}
///     + (w_k^l)^H Hk w_k^l + gamma sigma^2 <= 0.
inline QuadConstraint sca_qos_constraint(int k, const CMat& expansion, const CMat& qos_quad,
                                         double gamma, double noise) {
  const int n = static_cast<int>(expansion.rows());
  const int users = static_cast<int>(expansion.cols());
  const int dim = 2 * n * users;

  QuadConstraint c;
  c.quad = Mat::Zero(dim, dim);
  const Mat lifted = lift_hermitian(qos_quad);
  for (int j = 0; j < users; ++j) {
    if (j == k) continue;
    beam_detail::add_user_block(c.quad, j, 2.0 * gamma * lifted);
  }
  c.lin = Vec::Zero(dim);
  const CVec a = -2.0 * (qos_quad * expansion.col(k));
  c.lin.segment(2 * n * k, 2 * n) = lift_linear(a);
  c.constant = std::real(expansion.col(k).dot(qos_quad * expansion.col(k))) + gamma * noise;
  return c;
}

namespace beam_detail {

/// FP objective over the lifted stacked beams: exact, not a surrogate
/// (the clutter quadratic is the exact W-dependence of tr(L^H Xi L)).
struct BeamObjective {
  Vec lin;
  Mat quad;
  double constant = 0.0;
};

inline BeamObjective build_objective(const CMat& aux, const Vec& rx_positions,
                                     const Vec& tx_positions, const RadarGeometry& radar,
                                     double wavelength, double noise_radar, int n, int users) {
  const int dim = 2 * n * users;
  BeamObjective out;
  out.lin = Vec::Zero(dim);
  out.quad = Mat::Zero(dim, dim);

  const CMat a0 = radar_response_matrix(rx_positions, tx_positions, radar.target, wavelength);
  const CMat m = a0.adjoint() * aux;  // linear coefficients per user
  for (int k = 0; k < users; ++k)
    out.lin.segment(2 * n * k, 2 * n) = lift_linear(2.0 * radar.target_power * m.col(k));

  CMat clutter_sum = CMat::Zero(n, n);
  for (int q = 0; q < radar.num_clutter(); ++q) {
    const CVec ar = steering_vector(rx_positions, radar.clutter[q], wavelength);
    const CVec at = steering_vector(tx_positions, radar.clutter[q], wavelength);
    // A_q^H Lambda Lambda^H A_q = a_t ||Lambda^H a_r||^2 a_t^H
    const double s = (aux.adjoint() * ar).squaredNorm();
    clutter_sum += (radar.clutter_powers(q) * s) * (at * at.adjoint());
  }
  if (radar.num_clutter() > 0) {
    const Mat lifted = lift_hermitian(clutter_sum);
    for (int k = 0; k < users; ++k)
      add_user_block(out.quad, k, -2.0 * radar.target_power * lifted);
  }
  out.constant = -radar.target_power * noise_radar * aux.squaredNorm();
  return out;
}

inline CMat unstack_beams(const Vec& x, int n, int users) {
  CMat w(n, users);
  for (int k = 0; k < users; ++k) w.col(k) = unlift_point(x.segment(2 * n * k, 2 * n));
  return w;
}

inline Vec stack_beams(const CMat& w) {
  const int n = static_cast<int>(w.rows());
  Vec x(2 * n * w.cols());
  for (int k = 0; k < w.cols(); ++k) x.segment(2 * n * k, 2 * n) = lift_point(w.col(k));
  return x;
}

}  // namespace beam_detail

struct BeamUpdateResult {
  CMat beams;
  double objective = 0.0;        // FP objective at the returned beams
  bool improved = false;
  bool infeasible_flag = false;  // first subproblem infeasible; input kept
  int solves = 0;
};

/// One BCD block update of W: maximize the FP objective subject to the
/// SCA QoS under-estimators and the power budget, iterating the expansion
/// point. Never returns beams with a smaller FP objective than the input.
inline BeamUpdateResult update_beamforming(const DesignVariables& dv, const ChannelState& cs,
                                           const ScenarioConfig& cfg) {
  const int n = cfg.num_antennas;
  const int users = cfg.num_users;
  const int dim = 2 * n * users;

  std::vector<CMat> qos(users);
  for (int k = 0; k < users; ++k) qos[k] = qos_quadratic(k, cs, dv.ris);

  const auto obj =
      beam_detail::build_objective(dv.aux, dv.rx_positions, dv.tx_positions, cfg.radar,
                                   cfg.wavelength, cfg.noise_radar, n, users);
  auto fp_of = [&](const CMat& w) {
    return fp_objective(w, dv.rx_positions, dv.tx_positions, dv.aux, cfg.radar, cfg.wavelength,
                        cfg.noise_radar);
  };

  BeamUpdateResult res;
  res.beams = dv.beams;
  const double obj_in = fp_of(dv.beams);
  res.objective = obj_in;

  CMat w = dv.beams;
  double prev = obj_in;
  for (int it = 0; it < cfg.algo.beam_sca_iters; ++it) {
    ConvexQcqp p;
    p.dim = dim;
    p.obj_lin = obj.lin;
    p.obj_quad = obj.quad;
    p.obj_constant = obj.constant;
    for (int k = 0; k < users; ++k)
      p.constraints.push_back(sca_qos_constraint(k, w, qos[k], cfg.qos_floor, cfg.noise_comm));
    QuadConstraint power;
    power.quad = 2.0 * Mat::Identity(dim, dim);
    power.lin = Vec::Zero(dim);
    power.constant = -cfg.tx_power;
    p.constraints.push_back(power);

    const Vec x0 = beam_detail::stack_beams(w);
    const auto rep = solve(p, cfg.algo.solver_tol, &x0);
    ++res.solves;
    if (rep.status == SolveStatus::infeasible) {
      if (it == 0) res.infeasible_flag = true;
      break;
    }
    w = beam_detail::unstack_beams(rep.solution, n, users);
    const double val = fp_of(w);
    const bool settled = std::abs(val - prev) <= cfg.algo.beam_sca_tol * (1.0 + std::abs(prev));
    prev = val;
    if (settled) break;
  }

  if (prev >= obj_in - 1e-12 * (1.0 + std::abs(obj_in)) && !res.infeasible_flag) {
    res.beams = w;
    res.objective = prev;
    res.improved = prev > obj_in;
  }
  return res;
}

struct RepairResult {
  CMat beams;
  bool feasible = false;
  int solves = 0;
};

/// Feasibility repair used at initialization: minimize transmit power
/// subject to the SCA QoS constraints, starting from matched beams.
/// Succeeds when the repaired beams meet the true QoS within the budget.
inline RepairResult repair_qos_feasibility(const CMat& start, const ChannelState& cs,
                                           const CVec& ris, const ScenarioConfig& cfg) {
  const int n = cfg.num_antennas;
  const int users = cfg.num_users;
  const int dim = 2 * n * users;

  std::vector<CMat> qos(users);
  for (int k = 0; k < users; ++k) qos[k] = qos_quadratic(k, cs, ris);

  auto min_sinr = [&](const CMat& w) { return min_comm_sinr(w, ris, cs, cfg.noise_comm); };

  RepairResult res;
  res.beams = start;
  if (min_sinr(start) >= cfg.qos_floor) {
    res.feasible = true;
    return res;
  }

  CMat w = start;
  double prev_power = std::numeric_limits<double>::infinity();
  for (int it = 0; it < cfg.algo.repair_iters; ++it) {
    ConvexQcqp p;
    p.dim = dim;
    p.obj_quad = -Mat::Identity(dim, dim);  // maximize -1/2 ||x||^2
    for (int k = 0; k < users; ++k)
      p.constraints.push_back(sca_qos_constraint(k, w, qos[k], cfg.qos_floor, cfg.noise_comm));

    const Vec x0 = beam_detail::stack_beams(w);
    const auto rep = solve(p, cfg.algo.solver_tol, &x0);
    ++res.solves;
    if (rep.status == SolveStatus::infeasible) return res;
    w = beam_detail::unstack_beams(rep.solution, n, users);
    const double power = w.squaredNorm();
    const bool ok = min_sinr(w) >= cfg.qos_floor * (1.0 - 1e-12);
    if (ok && power <= cfg.tx_power * (1.0 + 1e-9)) {
      res.beams = w;
      res.feasible = true;
      return res;
    }
    if (power >= prev_power * (1.0 - 1e-6) && it > 0) break;  // stalled above budget
    prev_power = power;
  }
  return res;
}

}  // namespace dfrc
