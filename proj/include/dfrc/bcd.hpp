#pragma once

#include "dfrc/baselines.hpp"
#include "dfrc/beamforming.hpp"
#include "dfrc/positions.hpp"
#include "dfrc/ris.hpp"

#include <chrono>
#include <string>
#include <vector>

namespace dfrc {

struct PassTrace {
  double fp_after_aux = 0.0;   // FP objective right after the auxiliary update
  double fp_objective = 0.0;   // FP objective at pass end
  double radar_sinr = 0.0;     // trace form, same point
  double min_qos_ratio = 0.0;  // min_k Gamma_k / gamma
  double ris_modulus_violation = 0.0;
  double wall_seconds = 0.0;
};

struct IterationTrace {
  std::vector<PassTrace> passes;
  bool converged = false;
  std::string status;  // converged | max_passes | stalled
};

struct TrialOutcome {
  bool feasible = false;  // initialization reached a QoS-feasible start
  DesignVariables vars;
  IterationTrace trace;
  double final_radar_sinr = 0.0;
  double final_min_qos_ratio = 0.0;
  int passes = 0;
  double wall_seconds = 0.0;
};

/// Start-of-trial state: half-wavelength grid (or random layout for the
/// RPA scheme), random RIS phases, matched beams repaired into QoS
/// feasibility, and the closed-form auxiliary.
inline DesignVariables initialize(ChannelState& cs, const ScenarioConfig& cfg, Rng& rng,
                                  SchemeTag scheme, bool* feasible_out) {
  DesignVariables dv;
  if (scheme == SchemeTag::rpa) {
    dv.tx_positions = rpa_layout(cfg.num_antennas, cfg.region_size, cfg.min_spacing, rng);
    dv.rx_positions = rpa_layout(cfg.num_antennas, cfg.region_size, cfg.min_spacing, rng);
  } else {
    dv.tx_positions = fpa_layout(cfg.num_antennas, cfg.wavelength, cfg.region_size);
    dv.rx_positions = dv.tx_positions;
  }
  cs.refresh(dv.tx_positions);

  dv.ris = random_ris(cfg.num_ris, rng);

  // matched beams through the cascaded channel, equal power split
  dv.beams = CMat::Zero(cfg.num_antennas, cfg.num_users);
  for (int k = 0; k < cfg.num_users; ++k) {
    const CVec e = effective_user_channel(k, cs, dv.ris);
    const double nrm = e.norm();
    if (nrm > 0.0)
      dv.beams.col(k) = std::sqrt(cfg.tx_power / cfg.num_users) * (e / nrm);
  }

  const auto repair = repair_qos_feasibility(dv.beams, cs, dv.ris, cfg);
  dv.beams = repair.beams;
  if (feasible_out != nullptr) *feasible_out = repair.feasible;

  dv.aux = optimal_aux(dv.beams, dv.rx_positions, dv.tx_positions, cfg.radar, cfg.wavelength,
                       cfg.noise_radar);
  return dv;
}

namespace bcd_detail {

inline double gas_block(DesignVariables& dv, ChannelState& cs, const ScenarioConfig& cfg) {
  // transmit side: accept the greedy layout only if it improves the
  // objective and keeps every user feasible
  const auto txf =
      tx_objective_factors(dv.beams, dv.aux, dv.rx_positions, cfg.radar, cfg.wavelength);
  const double before_tx = position_objective(dv.tx_positions, txf, cfg.radar, cfg.wavelength);
  const auto gas_tx = gas_positions(txf, cfg.radar, cfg.wavelength, cfg.num_antennas,
                                    cfg.region_size, cfg.min_spacing);
  double moved = 0.0;
  if (gas_tx.objective > before_tx) {
    const Vec saved = dv.tx_positions;
    dv.tx_positions = gas_tx.positions;
    cs.refresh(dv.tx_positions);
    if (min_comm_sinr(dv.beams, dv.ris, cs, cfg.noise_comm) >=
        cfg.qos_floor * (1.0 - 1e-12)) {
      moved += (saved - dv.tx_positions).norm();
    } else {
      dv.tx_positions = saved;
      cs.refresh(dv.tx_positions);
    }
  }

  const auto rxf =
      rx_objective_factors(dv.beams, dv.aux, dv.tx_positions, cfg.radar, cfg.wavelength);
  const double before_rx = position_objective(dv.rx_positions, rxf, cfg.radar, cfg.wavelength);
  const auto gas_rx = gas_positions(rxf, cfg.radar, cfg.wavelength, cfg.num_antennas,
                                    cfg.region_size, cfg.min_spacing);
  if (gas_rx.objective > before_rx) {
    moved += (dv.rx_positions - gas_rx.positions).norm();
    dv.rx_positions = gas_rx.positions;
  }
  return moved;
}

}  // namespace bcd_detail

/// Outer block-coordinate loop in the fixed order
/// auxiliary -> beams -> RIS -> transmit positions -> receive positions,
/// with per-scheme blocks frozen. Stops when the FP objective settles.
inline TrialOutcome run_bcd(ChannelState& cs, const ScenarioConfig& cfg, Rng& rng,
                            SchemeTag scheme) {
  using clock = std::chrono::steady_clock;
  const auto trial_start = clock::now();

  TrialOutcome out;
  bool feasible = false;
  out.vars = initialize(cs, cfg, rng, scheme, &feasible);
  out.feasible = feasible;
  if (!feasible) {
    out.trace.status = "infeasible_init";
    return out;
  }
  DesignVariables& dv = out.vars;

  auto fp_now = [&]() {
    return fp_objective(dv.beams, dv.rx_positions, dv.tx_positions, dv.aux, cfg.radar,
                        cfg.wavelength, cfg.noise_radar);
  };

  double fp_prev = fp_now();
  int idle_passes = 0;
  const bool moves_positions =
      scheme == SchemeTag::proposed || scheme == SchemeTag::random_ris;

  for (int pass = 0; pass < cfg.algo.bcd_max_passes; ++pass) {
    const auto pass_start = clock::now();
    PassTrace tr;
    bool pass_changed = false;

    dv.aux = optimal_aux(dv.beams, dv.rx_positions, dv.tx_positions, cfg.radar, cfg.wavelength,
                         cfg.noise_radar);
    tr.fp_after_aux = fp_now();

    const auto beam_res = update_beamforming(dv, cs, cfg);
    if (!beam_res.infeasible_flag) {
      if ((beam_res.beams - dv.beams).cwiseAbs().maxCoeff() > 0.0) pass_changed = true;
      dv.beams = beam_res.beams;
    }

    if (scheme != SchemeTag::random_ris) {
      const auto ris_res = update_ris(dv, cs, cfg);
      if (ris_res.accepted) {
        if ((ris_res.ris - dv.ris).cwiseAbs().maxCoeff() > 0.0) pass_changed = true;
        dv.ris = ris_res.ris;
      }
    }

    if (moves_positions) {
      const auto tx_res = update_tx_positions(dv, cs, cfg);
      pass_changed = pass_changed || tx_res.changed;
      const auto rx_res = update_rx_positions(dv, cs, cfg);
      pass_changed = pass_changed || rx_res.changed;
    } else if (scheme == SchemeTag::gas) {
      pass_changed = bcd_detail::gas_block(dv, cs, cfg) > 0.0 || pass_changed;
    }

    tr.fp_objective = fp_now();
    tr.radar_sinr = radar_sinr(dv.beams, dv.rx_positions, dv.tx_positions, cfg.radar,
                               cfg.wavelength, cfg.noise_radar);
    tr.min_qos_ratio = min_comm_sinr(dv.beams, dv.ris, cs, cfg.noise_comm) / cfg.qos_floor;
    double viol = 0.0;
    for (int i = 0; i < cfg.num_ris; ++i)
      viol = std::max(viol, std::abs(std::abs(dv.ris(i)) - 1.0));
    tr.ris_modulus_violation = viol;
    tr.wall_seconds = std::chrono::duration<double>(clock::now() - pass_start).count();
    out.trace.passes.push_back(tr);

    const double rel_change = std::abs(tr.fp_objective - fp_prev) /
                              std::max(std::abs(fp_prev), 1e-300);
    fp_prev = tr.fp_objective;
    if (rel_change < cfg.algo.bcd_tol) {
      out.trace.converged = true;
      out.trace.status = "converged";
      break;
    }
    idle_passes = pass_changed ? 0 : idle_passes + 1;
    if (idle_passes >= 2) {
      out.trace.status = "stalled";
      break;
    }
  }
  if (out.trace.status.empty()) out.trace.status = "max_passes";

  out.passes = static_cast<int>(out.trace.passes.size());
  out.final_radar_sinr = radar_sinr(dv.beams, dv.rx_positions, dv.tx_positions, cfg.radar,
                                    cfg.wavelength, cfg.noise_radar);
  out.final_min_qos_ratio = min_comm_sinr(dv.beams, dv.ris, cs, cfg.noise_comm) / cfg.qos_floor;
  out.wall_seconds = std::chrono::duration<double>(clock::now() - trial_start).count();
  return out;
}

}  // namespace dfrc
