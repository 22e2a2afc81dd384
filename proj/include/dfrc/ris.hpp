#pragma once

#include "dfrc/metrics.hpp"
#include "dfrc/qcqp.hpp"

#include <stdexcept>
#include <vector>

namespace dfrc {

/// Cascaded per-(user, beam) RIS vectors htilde_{k,j} = diag(h_k^H) H w_j,
/// so that v^H htilde_{k,j} = h_k^H V H w_j with v the conjugated
/// coefficient vector, plus the per-user interference quadratic
/// B_k = sum_{j != k} htilde_{k,j} htilde_{k,j}^H.
struct RisQuadratics {
  std::vector<std::vector<CVec>> cascade;  // [k][j], M-vectors
  std::vector<CMat> interference;          // B_k, M x M PSD
};

inline RisQuadratics build_ris_quadratics(const ChannelState& cs, const CMat& beams) {
  const int users = static_cast<int>(beams.cols());
  const int m = static_cast<int>(cs.bs_ris.rows());
  RisQuadratics out;
  out.cascade.assign(users, std::vector<CVec>(users));
  out.interference.assign(users, CMat::Zero(m, m));
  for (int k = 0; k < users; ++k) {
    const CVec hconj = cs.user_channels[k].conjugate();
    for (int j = 0; j < users; ++j) {
      out.cascade[k][j] = hconj.cwiseProduct(cs.bs_ris * beams.col(j));
      if (j != k)
        out.interference[k] += out.cascade[k][j] * out.cascade[k][j].adjoint();
    }
  }
  return out;
}

/// Convex upper bound of the product eta * z around a positive expansion
/// point; equality holds at the expansion point.
inline double bilinear_upper_bound(double eta, double z, double eta0, double z0) {
  if (eta0 <= 0.0 || z0 <= 0.0)
    throw std::invalid_argument("bilinear bound needs a positive expansion point");
  return 0.5 * ((z0 / eta0) * eta * eta + (eta0 / z0) * z * z);
}

struct RisInnerResult {
  CVec v;        // conjugated coefficient vector
  double eta = 0.0;
  Vec z;
  bool infeasible = false;
  double objective = 0.0;
};

/// One solve of the penalized inner problem: maximize
///   eta + rho (2 Re{(v^l)^H v} - ||v^l||^2) - rho M
/// over the SCA-feasible slack region with per-element unit balls.
inline RisInnerResult ris_inner_step(const CVec& v_l, double eta_l, const Vec& z_l,
                                     const RisQuadratics& quads, double noise, double rho,
                                     double solver_tol) {
  const int m = static_cast<int>(v_l.size());
  const int users = static_cast<int>(z_l.size());
  const int dim = 2 * m + 1 + users;
  const int eta_ix = 2 * m;

  ConvexQcqp p;
  p.dim = dim;
  p.obj_lin = Vec::Zero(dim);
  p.obj_lin(eta_ix) = 1.0;
  p.obj_lin.head(2 * m) = lift_linear(2.0 * rho * v_l);
  p.obj_constant = -rho * (v_l.squaredNorm() + m);

  // interference bounds: v^H B_k v + noise <= z_k
  for (int k = 0; k < users; ++k) {
    QuadConstraint c;
    c.quad = Mat::Zero(dim, dim);
    c.quad.topLeftCorner(2 * m, 2 * m) = 2.0 * lift_hermitian(quads.interference[k]);
    c.lin = Vec::Zero(dim);
    c.lin(eta_ix + 1 + k) = -1.0;
    c.constant = noise;
    p.constraints.push_back(std::move(c));
  }

  // linearized signal bounds: bilinear bound <= 2Re{(v^l)^H Hkk v} - (v^l)^H Hkk v^l
  for (int k = 0; k < users; ++k) {
    const CVec& hk = quads.cascade[k][k];
    const Complex corr = hk.dot(v_l);  // htilde^H v^l
    QuadConstraint c;
    c.quad = Mat::Zero(dim, dim);
    c.quad(eta_ix, eta_ix) = z_l(k) / eta_l;
    c.quad(eta_ix + 1 + k, eta_ix + 1 + k) = eta_l / z_l(k);
    c.lin = Vec::Zero(dim);
    c.lin.head(2 * m) = lift_linear(-2.0 * (hk * corr));  // -2 Hkk v^l
    c.constant = std::norm(corr);                          // (v^l)^H Hkk v^l
    p.constraints.push_back(std::move(c));
  }

  // per-element unit balls and eta >= 0
  for (int i = 0; i < m; ++i) {
    QuadConstraint c;
    c.quad = Mat::Zero(dim, dim);
    c.quad(2 * i, 2 * i) = 2.0;
    c.quad(2 * i + 1, 2 * i + 1) = 2.0;
    c.lin = Vec::Zero(dim);
    c.constant = -1.0;
    p.constraints.push_back(std::move(c));
  }
  p.lower = Vec::Constant(dim, -std::numeric_limits<double>::infinity());
  p.upper = Vec::Constant(dim, std::numeric_limits<double>::infinity());
  p.lower(eta_ix) = 0.0;

  Vec x0(dim);
  x0.head(2 * m) = lift_point(v_l);
  x0(eta_ix) = eta_l;
  x0.tail(users) = z_l;

  const auto rep = solve(p, solver_tol, &x0);
  RisInnerResult out;
  if (rep.status == SolveStatus::infeasible) {
    out.v = v_l;
    out.eta = eta_l;
    out.z = z_l;
    out.infeasible = true;
    return out;
  }
  out.v = unlift_point(rep.solution.head(2 * m));
  out.eta = rep.solution(eta_ix);
  out.z = rep.solution.tail(users);
  out.objective = rep.objective;
  return out;
}

struct RisUpdateReport {
  CVec ris;                  // physical coefficients, exactly unit modulus
  bool accepted = false;     // false: reverted to the input coefficients
  bool penalty_converged = false;
  double exit_norm_sq = 0.0; // pre-projection ||v||^2 at loop exit
  double min_sinr_before = 0.0;
  double min_sinr_after = 0.0;
  int outer_rounds = 0;
  int solves = 0;
};

/// Two-layer penalty loop on the reflection coefficients. The inner loop
/// runs the SCA step until the iterate settles; the outer loop grows the
/// penalty weight until the solution reaches the unit-modulus sphere. The
/// result is projected elementwise onto the unit circle and only accepted
/// if the minimum user SINR did not degrade.
inline RisUpdateReport update_ris(const DesignVariables& dv, const ChannelState& cs,
                                  const ScenarioConfig& cfg) {
  const int m = cfg.num_ris;
  const auto& al = cfg.algo;
  const auto quads = build_ris_quadratics(cs, dv.beams);

  RisUpdateReport rep;
  rep.ris = dv.ris;
  rep.min_sinr_before = min_comm_sinr(dv.beams, dv.ris, cs, cfg.noise_comm);

  CVec v = dv.ris.conjugate();
  double eta = rep.min_sinr_before;
  Vec z(cfg.num_users);
  for (int k = 0; k < cfg.num_users; ++k) {
    double acc = cfg.noise_comm;
    for (int j = 0; j < cfg.num_users; ++j) {
      if (j == k) continue;
      acc += std::norm(quads.cascade[k][j].dot(v));
    }
    z(k) = acc;
  }

  double rho = al.ris_rho_frac * m;
  rep.exit_norm_sq = v.squaredNorm();
  for (int outer = 0; outer < al.ris_outer_cap; ++outer) {
    ++rep.outer_rounds;
    for (int inner = 0; inner < al.ris_inner_cap; ++inner) {
      const double eta_l = std::max(eta, 1e-30);
      Vec z_l = z.cwiseMax(1e-30);
      auto step = ris_inner_step(v, eta_l, z_l, quads, cfg.noise_comm, rho, al.solver_tol);
      ++rep.solves;
      if (step.infeasible) break;
      const double delta = (step.v - v).squaredNorm();
      v = step.v;
      eta = step.eta;
      z = step.z;
      if (delta <= al.ris_xi1) break;
    }
    rep.exit_norm_sq = v.squaredNorm();
    if (m - rep.exit_norm_sq <= al.ris_xi2) {
      rep.penalty_converged = true;
      break;
    }
    rho *= al.ris_tau;
  }

  CVec projected(m);
  for (int i = 0; i < m; ++i) {
    const Complex phys = std::conj(v(i));
    projected(i) = (std::abs(phys) == 0.0) ? dv.ris(i) : unit_normalize(phys);
  }

  const double after = min_comm_sinr(dv.beams, projected, cs, cfg.noise_comm);
  if (after >= rep.min_sinr_before * (1.0 - 1e-9)) {
    rep.ris = projected;
    rep.accepted = true;
    rep.min_sinr_after = after;
  } else {
    rep.min_sinr_after = rep.min_sinr_before;
  }
  return rep;
}

}  // namespace dfrc
