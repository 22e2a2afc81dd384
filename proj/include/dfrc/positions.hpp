#pragma once

#include "dfrc/metrics.hpp"
#include "dfrc/qcqp.hpp"

#include <string>
#include <vector>

namespace dfrc {

/// Position-dependent part of the FP objective in factored form:
///   2 Re{ linear^H a_0(pos) } - sum_q clutter_scale_q a_q(pos)^H quad a_q(pos).
/// For the transmit update linear = zeta0^2 W Lambda^H a_0^r and quad = W W^H;
/// for the receive update linear = zeta0^2 Lambda W^H a_0^t and quad =
/// Lambda Lambda^H. Either way clutter_scale_q >= 0 and quad is PSD.
struct ObjectiveFactors {
  CVec linear;
  Vec clutter_scale;
  CMat quad;
};

inline ObjectiveFactors tx_objective_factors(const CMat& beams, const CMat& aux,
                                             const Vec& rx_positions, const RadarGeometry& radar,
                                             double wavelength) {
  ObjectiveFactors f;
  const CVec a0r = steering_vector(rx_positions, radar.target, wavelength);
  f.linear = radar.target_power * (beams * (aux.adjoint() * a0r));
  f.quad = beams * beams.adjoint();
  f.clutter_scale = Vec(radar.num_clutter());
  for (int q = 0; q < radar.num_clutter(); ++q) {
    const CVec ar = steering_vector(rx_positions, radar.clutter[q], wavelength);
    f.clutter_scale(q) =
        radar.target_power * radar.clutter_powers(q) * (aux.adjoint() * ar).squaredNorm();
  }
  return f;
}

inline ObjectiveFactors rx_objective_factors(const CMat& beams, const CMat& aux,
                                             const Vec& tx_positions, const RadarGeometry& radar,
                                             double wavelength) {
  ObjectiveFactors f;
  const CVec a0t = steering_vector(tx_positions, radar.target, wavelength);
  f.linear = radar.target_power * (aux * (beams.adjoint() * a0t));
  f.quad = aux * aux.adjoint();
  f.clutter_scale = Vec(radar.num_clutter());
  for (int q = 0; q < radar.num_clutter(); ++q) {
    const CVec at = steering_vector(tx_positions, radar.clutter[q], wavelength);
    f.clutter_scale(q) =
        radar.target_power * radar.clutter_powers(q) * (beams.adjoint() * at).squaredNorm();
  }
  return f;
}

/// Objective value at the given stacked positions (target/clutter angles
/// from `radar`, steering built on the fly).
inline double position_objective(const Vec& pos, const ObjectiveFactors& f,
                                 const RadarGeometry& radar, double wavelength) {
  const CVec a0 = steering_vector(pos, radar.target, wavelength);
  double val = 2.0 * std::real(f.linear.dot(a0));
  for (int q = 0; q < radar.num_clutter(); ++q) {
    const CVec aq = steering_vector(pos, radar.clutter[q], wavelength);
    val -= f.clutter_scale(q) * std::real(aq.dot(f.quad * aq));
  }
  return val;
}

/// Analytic gradient of position_objective with respect to the stacked
/// coordinates. Each steering entry is exp(j k rho) with rho linear in the
/// coordinates, so every term differentiates in closed form.
inline Vec objective_gradient(const Vec& pos, const ObjectiveFactors& f,
                              const RadarGeometry& radar, double wavelength) {
  const double kwave = 2.0 * kPi / wavelength;
  const Eigen::Index n = pos.size() / 2;
  Vec g = Vec::Zero(2 * n);

  const CVec a0 = steering_vector(pos, radar.target, wavelength);
  const auto [u0, w0] = propagation_diff_grad(radar.target);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double im = std::imag(std::conj(f.linear(i)) * a0(i));
    g(2 * i) += -2.0 * kwave * u0 * im;
    g(2 * i + 1) += -2.0 * kwave * w0 * im;
  }

  for (int q = 0; q < radar.num_clutter(); ++q) {
    const CVec aq = steering_vector(pos, radar.clutter[q], wavelength);
    const CVec daq = f.quad * aq;
    const auto [uq, wq] = propagation_diff_grad(radar.clutter[q]);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double im = std::imag(std::conj(aq(i)) * daq(i));
      g(2 * i) += -f.clutter_scale(q) * 2.0 * kwave * uq * im;
      g(2 * i + 1) += -f.clutter_scale(q) * 2.0 * kwave * wq * im;
    }
  }
  return g;
}

/// Position-independent bound on the Hessian spectral norm of the
/// objective: each exponential term of magnitude |c| contributes at most
/// (2 pi / lambda)^2 |c| * 2 (the squared direction factors sum to at
/// most 2 over the coordinates the term touches).
inline double curvature_bound(const ObjectiveFactors& f, double wavelength) {
  const double k2 = std::pow(2.0 * kPi / wavelength, 2.0);
  double delta = 4.0 * k2 * f.linear.cwiseAbs().sum();
  const Eigen::Index n = f.quad.rows();
  for (int q = 0; q < f.clutter_scale.size(); ++q) {
    double offdiag = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j)
        if (i != j) offdiag += std::abs(f.quad(i, j));
    delta += 2.0 * k2 * f.clutter_scale(q) * offdiag;
  }
  return std::max(delta, 1e-12);
}

// ---------------------------------------------------------------------------
// QoS constraint pieces: f_k(t) = p^H R_k p with p_n = g(t_n)^H a_k.
// ---------------------------------------------------------------------------

struct QosPositionData {
  CVec path_weights;  // a_k = Sigma^H F V^H h_k, length L
  CMat beam_form;     // R_k = gamma sum_{j!=k} w_j w_j^H - w_k w_k^H, Hermitian
  double gamma = 0.0;
  double noise = 0.0;
};

inline QosPositionData qos_position_data(int k, const ChannelState& cs, const CVec& ris,
                                         const CMat& beams, double gamma, double noise) {
  QosPositionData d;
  d.path_weights =
      cs.bs_ris_gains.conjugate().cwiseProduct(cs.ris_frm * ris.conjugate().cwiseProduct(
                                                   cs.user_channels[k]));
  const int users = static_cast<int>(beams.cols());
  d.beam_form = CMat::Zero(beams.rows(), beams.rows());
  for (int j = 0; j < users; ++j) {
    if (j == k)
      d.beam_form -= beams.col(j) * beams.col(j).adjoint();
    else
      d.beam_form += gamma * beams.col(j) * beams.col(j).adjoint();
  }
  d.gamma = gamma;
  d.noise = noise;
  return d;
}

inline CVec qos_projection(const Vec& pos, const QosPositionData& d,
                           const PathAngles& bs_angles, double wavelength) {
  const CMat g = field_response_matrix(unstack_positions(pos), bs_angles, wavelength);
  return g.adjoint() * d.path_weights;  // p
}

inline double qos_position_value(const Vec& pos, const QosPositionData& d,
                                 const PathAngles& bs_angles, double wavelength) {
  const CVec p = qos_projection(pos, d, bs_angles, wavelength);
  return std::real(p.dot(d.beam_form * p));
}

inline Vec qos_position_gradient(const Vec& pos, const QosPositionData& d,
                                 const PathAngles& bs_angles, double wavelength) {
  const double kwave = 2.0 * kPi / wavelength;
  const Eigen::Index n = pos.size() / 2;
  const int paths = static_cast<int>(bs_angles.size());
  const CMat g = field_response_matrix(unstack_positions(pos), bs_angles, wavelength);
  const CVec p = g.adjoint() * d.path_weights;
  const CVec rp = d.beam_form * p;

  Vec grad = Vec::Zero(2 * n);
  for (Eigen::Index i = 0; i < n; ++i) {
    Complex dpx{0, 0}, dpy{0, 0};
    for (int l = 0; l < paths; ++l) {
      const auto [ul, wl] = propagation_diff_grad(bs_angles[l]);
      const Complex base = d.path_weights(l) * std::conj(g(l, i));
      dpx += base * Complex{0, -kwave * ul};
      dpy += base * Complex{0, -kwave * wl};
    }
    grad(2 * i) = 2.0 * std::real(std::conj(dpx) * rp(i));
    grad(2 * i + 1) = 2.0 * std::real(std::conj(dpy) * rp(i));
  }
  return grad;
}

/// Hessian-norm bound for f_k via the sum of exponential-term magnitudes.
inline double qos_curvature_bound(const QosPositionData& d, double wavelength) {
  const double k2 = std::pow(2.0 * kPi / wavelength, 2.0);
  const Eigen::Index n = d.beam_form.rows();
  const double s1 = d.path_weights.cwiseAbs().sum();
  const double s2 = d.path_weights.squaredNorm();
  double offdiag = 0.0, diag = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i == j)
        diag += std::abs(d.beam_form(i, j));
      else
        offdiag += std::abs(d.beam_form(i, j));
    }
  }
  return std::max(2.0 * k2 * (offdiag * s1 * s1 + diag * (s1 * s1 - s2)), 1e-12);
}

/// Quadratic surrogate constraint of user k at the expansion point:
///   f_k(t^l) + grad^T (t - t^l) + (delta/2)||t - t^l||^2 + gamma sigma^2 <= 0.
inline QuadConstraint qos_position_constraint(const Vec& expansion, double f_value,
                                              const Vec& f_gradient, double delta,
                                              double gamma, double noise) {
  const Eigen::Index dim = expansion.size();
  QuadConstraint c;
  c.quad = delta * Mat::Identity(dim, dim);
  c.lin = f_gradient - delta * expansion;
  c.constant = f_value - f_gradient.dot(expansion) + 0.5 * delta * expansion.squaredNorm() +
               gamma * noise;
  return c;
}

/// Linearized minimum-distance constraints, one per unordered antenna pair:
///   D^2 + ||d^l||^2 - 2 (d^l)^T (t_n - t_n') <= 0,  d^l = t_n^l - t_n'^l.
inline std::vector<QuadConstraint> min_distance_constraints(const Vec& expansion,
                                                            double min_dist,
                                                            double wavelength) {
  const Eigen::Index n = expansion.size() / 2;
  std::vector<QuadConstraint> out;
  for (Eigen::Index a = 0; a < n; ++a) {
    for (Eigen::Index b = a + 1; b < n; ++b) {
      double dx = expansion(2 * a) - expansion(2 * b);
      double dy = expansion(2 * a + 1) - expansion(2 * b + 1);
      if (dx * dx + dy * dy == 0.0) {
        // coincident expansion points have no usable linearization;
        // nudge deterministically and proceed
        const double nudge = 1e-6 * wavelength;
        dx = nudge * (1.0 + static_cast<double>(a % 3));
        dy = nudge * (1.0 + static_cast<double>(b % 3));
      }
      QuadConstraint c;
      c.lin = Vec::Zero(2 * n);
      c.lin(2 * a) = -2.0 * dx;
      c.lin(2 * a + 1) = -2.0 * dy;
      c.lin(2 * b) = 2.0 * dx;
      c.lin(2 * b + 1) = 2.0 * dy;
      c.constant = min_dist * min_dist + dx * dx + dy * dy;
      out.push_back(std::move(c));
    }
  }
  return out;
}

struct PositionUpdateResult {
  Vec positions;
  double objective = 0.0;   // position_objective at the returned point
  bool skipped = false;     // QoS margin too thin to expand safely
  bool changed = false;
  int solves = 0;
};

namespace pos_detail {

struct QosSurrogate {
  QosPositionData data;
  double delta = 0.0;
};

/// Shared SCA loop for both position blocks. QoS surrogates may be empty
/// (receive update). Curvature bounds are doubled and the step recomputed
/// when a finite-precision check catches a surrogate on the wrong side.
inline PositionUpdateResult run_position_sca(Vec pos, const ObjectiveFactors& factors,
                                             std::vector<QosSurrogate> qos,
                                             const PathAngles& bs_angles,
                                             const ScenarioConfig& cfg) {
  const auto& al = cfg.algo;
  const Eigen::Index dim = pos.size();
  const double half = cfg.region_size / 2.0;

  PositionUpdateResult res;
  res.positions = pos;

  auto true_obj = [&](const Vec& t) {
    return position_objective(t, factors, cfg.radar, cfg.wavelength);
  };

  double delta0 = curvature_bound(factors, cfg.wavelength);
  double obj_cur = true_obj(pos);
  res.objective = obj_cur;

  for (int it = 0; it < al.pos_sca_iters; ++it) {
    const Vec grad = objective_gradient(pos, factors, cfg.radar, cfg.wavelength);
    std::vector<double> fvals(qos.size());
    std::vector<Vec> fgrads(qos.size());
    for (std::size_t k = 0; k < qos.size(); ++k) {
      fvals[k] = qos_position_value(pos, qos[k].data, bs_angles, cfg.wavelength);
      fgrads[k] = qos_position_gradient(pos, qos[k].data, bs_angles, cfg.wavelength);
    }

    Vec cand;
    bool solved = false;
    for (int doubling = 0; doubling <= al.pos_delta_doublings; ++doubling) {
      ConvexQcqp p;
      p.dim = static_cast<int>(dim);
      p.obj_quad = -delta0 * Mat::Identity(dim, dim);
      p.obj_lin = grad + delta0 * pos;
      p.obj_constant = obj_cur - grad.dot(pos) - 0.5 * delta0 * pos.squaredNorm();
      for (auto& c : min_distance_constraints(pos, cfg.min_spacing, cfg.wavelength))
        p.constraints.push_back(std::move(c));
      for (std::size_t k = 0; k < qos.size(); ++k)
        p.constraints.push_back(qos_position_constraint(
            pos, fvals[k], fgrads[k], qos[k].delta, qos[k].data.gamma, qos[k].data.noise));
      p.lower = Vec::Constant(dim, -half);
      p.upper = Vec::Constant(dim, half);

      const auto rep = solve(p, al.solver_tol, &pos);
      ++res.solves;
      if (rep.status == SolveStatus::infeasible) return res;
      cand = rep.solution;

      // certify the surrogate directions at the candidate
      bool ok = true;
      const double sur_obj = p.objective(cand);
      if (true_obj(cand) < sur_obj - 1e-9 * (1.0 + std::abs(sur_obj))) {
        delta0 *= 2.0;
        ok = false;
      }
      const Vec step_vec = cand - pos;
      for (std::size_t k = 0; k < qos.size() && ok; ++k) {
        const double truef = qos_position_value(cand, qos[k].data, bs_angles, cfg.wavelength);
        const double surf =
            fvals[k] + fgrads[k].dot(step_vec) + 0.5 * qos[k].delta * step_vec.squaredNorm();
        if (truef > surf + 1e-9 * (1.0 + std::abs(surf))) {
          qos[k].delta *= 2.0;
          ok = false;
        }
      }
      if (ok) {
        solved = true;
        break;
      }
    }
    if (!solved) break;

    const double obj_new = true_obj(cand);
    if (obj_new < obj_cur - 1e-12 * (1.0 + std::abs(obj_cur))) break;
    const double moved = (cand - pos).norm();
    pos = cand;
    obj_cur = obj_new;
    res.positions = pos;
    res.objective = obj_cur;
    res.changed = true;
    if (moved < al.pos_tol_wavelengths * cfg.wavelength) break;
  }
  return res;
}

}  // namespace pos_detail

/// Transmit-position block update (problem with QoS, box and min-distance
/// constraints). Refreshes the ChannelState on success.
inline PositionUpdateResult update_tx_positions(DesignVariables& dv, ChannelState& cs,
                                                const ScenarioConfig& cfg) {
  const auto factors = tx_objective_factors(dv.beams, dv.aux, dv.rx_positions, cfg.radar,
                                            cfg.wavelength);

  std::vector<pos_detail::QosSurrogate> qos(cfg.num_users);
  for (int k = 0; k < cfg.num_users; ++k) {
    qos[k].data = qos_position_data(k, cs, dv.ris, dv.beams, cfg.qos_floor, cfg.noise_comm);
    qos[k].delta = qos_curvature_bound(qos[k].data);
    const double margin =
        comm_sinr(k, dv.beams, dv.ris, cs, cfg.noise_comm) / cfg.qos_floor - 1.0;
    if (margin < cfg.algo.pos_qos_skip_margin) {
      PositionUpdateResult res;
      res.positions = dv.tx_positions;
      res.objective = position_objective(dv.tx_positions, factors, cfg.radar, cfg.wavelength);
      res.skipped = true;
      return res;
    }
  }

  auto res = pos_detail::run_position_sca(dv.tx_positions, factors, std::move(qos),
                                          cs.bs_angles, cfg);
  if (res.changed) {
    dv.tx_positions = res.positions;
    cs.refresh(dv.tx_positions);
  }
  return res;
}

/// Receive-position block update; the communication constraints do not
/// involve r, so only box and min-distance constraints apply.
inline PositionUpdateResult update_rx_positions(DesignVariables& dv, ChannelState& cs,
                                                const ScenarioConfig& cfg) {
  const auto factors = rx_objective_factors(dv.beams, dv.aux, dv.tx_positions, cfg.radar,
                                            cfg.wavelength);
  auto res = pos_detail::run_position_sca(dv.rx_positions, factors, {}, cs.bs_angles, cfg);
  if (res.changed) dv.rx_positions = res.positions;
  return res;
}

}  // namespace dfrc
