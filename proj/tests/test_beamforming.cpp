#include "dfrc/bcd.hpp"
#include "dfrc/beamforming.hpp"

#include "oracles.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace dfrc;

namespace {

struct Ctx {
  ScenarioConfig cfg;
  ChannelState cs;
  DesignVariables dv;
  bool feasible = false;
};

Ctx make_ctx(std::uint64_t seed, bool clutter_free = false, double qos_db = 10.0) {
  Ctx c;
  c.cfg = make_desk_scenario();
  c.cfg.qos_floor = db_to_linear(qos_db);
  if (clutter_free) {
    c.cfg.radar.clutter.clear();
    c.cfg.radar.clutter_powers = Vec();
  }
  Rng channel_rng(seed);
  c.cs = sample_channels(channel_rng, c.cfg);
  Rng init_rng = channel_rng.fork("init");
  c.dv = initialize(c.cs, c.cfg, init_rng, SchemeTag::proposed, &c.feasible);
  return c;
}

double fp_of(const Ctx& c, const CMat& w) {
  return fp_objective(w, c.dv.rx_positions, c.dv.tx_positions, c.dv.aux, c.cfg.radar,
                      c.cfg.wavelength, c.cfg.noise_radar);
}

}  // namespace

TEST_CASE("sca qos constraint") {
  Ctx c = make_ctx(2);
  REQUIRE(c.feasible);
  const int n = c.cfg.num_antennas;
  const int users = c.cfg.num_users;

  SECTION("exact at the expansion point") {
    for (int k = 0; k < users; ++k) {
      const CMat hq = qos_quadratic(k, c.cs, c.dv.ris);
      const auto con = sca_qos_constraint(k, c.dv.beams, hq, c.cfg.qos_floor, c.cfg.noise_comm);
      const Vec x = beam_detail::stack_beams(c.dv.beams);
      const CVec e = effective_user_channel(k, c.cs, c.dv.ris);
      double truev = c.cfg.qos_floor * c.cfg.noise_comm;
      for (int j = 0; j < users; ++j) {
        const double p = std::norm(e.dot(c.dv.beams.col(j)));
        truev += (j == k) ? -p : c.cfg.qos_floor * p;
      }
      CHECK(con.value(x) == Catch::Approx(truev).margin(1e-10 * (1.0 + std::abs(truev))));
    }
  }

  SECTION("signal term is a global under-estimator") {
    Rng rng(77);
    const CMat hq = qos_quadratic(0, c.cs, c.dv.ris);
    const CVec w_l = c.dv.beams.col(0);
    const double at_l = std::real(w_l.dot(hq * w_l));
    for (int t = 0; t < 1000; ++t) {
      const CVec w = oracle::random_cvec(rng, n, c.cfg.tx_power / n);
      const double truev = std::real(w.dot(hq * w));
      const double sur = 2.0 * std::real(w_l.dot(hq * w)) - at_l;
      CHECK(sur <= truev + 1e-9 * (1.0 + std::abs(truev)));
    }
  }

  SECTION("zero effective channel is infeasible for any beams") {
    const CMat zero_q = CMat::Zero(n, n);
    const auto con = sca_qos_constraint(0, c.dv.beams, zero_q, c.cfg.qos_floor,
                                        c.cfg.noise_comm);
    Rng rng(78);
    for (int t = 0; t < 10; ++t) {
      Vec x(2 * n * users);
      for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = rng.uniform(-1.0, 1.0);
      CHECK(con.value(x) == Catch::Approx(c.cfg.qos_floor * c.cfg.noise_comm));
    }
  }
}

TEST_CASE("beamforming update") {
  SECTION("clutter-free single user aligns with the response direction") {
    Ctx c = make_ctx(3, /*clutter_free=*/true, /*qos_db=*/-120.0);
    c.cfg.num_users = 1;
    Rng rng(30);
    c.cs = sample_channels(rng, c.cfg);
    Rng init = rng.fork("init");
    bool feasible = false;
    c.dv = initialize(c.cs, c.cfg, init, SchemeTag::proposed, &feasible);
    REQUIRE(feasible);

    const auto res = update_beamforming(c.dv, c.cs, c.cfg);
    REQUIRE_FALSE(res.infeasible_flag);
    const CMat a0 = radar_response_matrix(c.dv.rx_positions, c.dv.tx_positions,
                                          c.cfg.radar.target, c.cfg.wavelength);
    const CVec m = (a0.adjoint() * c.dv.aux).col(0);
    const CVec w = res.beams.col(0);
    const double align = std::abs(m.dot(w)) / (m.norm() * w.norm());
    CHECK(align == Catch::Approx(1.0).epsilon(1e-5));
    CHECK(w.squaredNorm() == Catch::Approx(c.cfg.tx_power).epsilon(1e-5));
    // closed-form optimum of a linear objective over the power ball
    const double closed = 2.0 * c.cfg.radar.target_power * m.norm() *
                              std::sqrt(c.cfg.tx_power) -
                          c.cfg.radar.target_power * c.cfg.noise_radar *
                              c.dv.aux.squaredNorm();
    CHECK(res.objective == Catch::Approx(closed).epsilon(1e-6));
  }

  SECTION("objective never degrades and constraints hold") {
    for (std::uint64_t seed : {4, 5, 6, 7}) {
      Ctx c = make_ctx(seed);
      if (!c.feasible) continue;
      const double before = fp_of(c, c.dv.beams);
      const auto res = update_beamforming(c.dv, c.cs, c.cfg);
      CHECK(res.objective >= before - 1e-8 * std::abs(before));
      CHECK(res.beams.squaredNorm() <= c.cfg.tx_power * (1.0 + 1e-9));
      for (int k = 0; k < c.cfg.num_users; ++k)
        CHECK(comm_sinr(k, res.beams, c.dv.ris, c.cs, c.cfg.noise_comm) >=
              c.cfg.qos_floor * (1.0 - 1e-6));
    }
  }

  SECTION("relaxing the qos floor cannot reduce the objective") {
    Ctx tight = make_ctx(8);
    REQUIRE(tight.feasible);
    Ctx loose = tight;
    loose.cfg.qos_floor = 1e-12;
    const auto rt = update_beamforming(tight.dv, tight.cs, tight.cfg);
    const auto rl = update_beamforming(loose.dv, loose.cs, loose.cfg);
    CHECK(rl.objective >= rt.objective - 1e-8 * std::abs(rt.objective));
  }

  SECTION("repeated update is a fixed point") {
    Ctx c = make_ctx(9);
    REQUIRE(c.feasible);
    const auto first = update_beamforming(c.dv, c.cs, c.cfg);
    DesignVariables dv2 = c.dv;
    dv2.beams = first.beams;
    const auto second = update_beamforming(dv2, c.cs, c.cfg);
    const double scale = first.beams.norm();
    CHECK((second.beams - first.beams).norm() <= 1e-3 * scale);
    CHECK(std::abs(second.objective - first.objective) <=
          1e-6 * (1.0 + std::abs(first.objective)));
  }
}

TEST_CASE("qos feasibility repair") {
  SECTION("repairs an infeasible matched start at the default floor") {
    int repaired = 0, attempts = 0;
    for (std::uint64_t seed = 20; seed < 28; ++seed) {
      ScenarioConfig cfg = make_desk_scenario();
      Rng rng(seed);
      ChannelState cs = sample_channels(rng, cfg);
      Rng init = rng.fork("init");
      const Vec grid = fpa_layout(cfg.num_antennas, cfg.wavelength, cfg.region_size);
      cs.refresh(grid);
      const CVec ris = random_ris(cfg.num_ris, init);
      CMat matched = CMat::Zero(cfg.num_antennas, cfg.num_users);
      for (int k = 0; k < cfg.num_users; ++k) {
        const CVec e = effective_user_channel(k, cs, ris);
        matched.col(k) = std::sqrt(cfg.tx_power / cfg.num_users) * (e / e.norm());
      }
      ++attempts;
      const auto rep = repair_qos_feasibility(matched, cs, ris, cfg);
      if (rep.feasible) {
        ++repaired;
        CHECK(min_comm_sinr(rep.beams, ris, cs, cfg.noise_comm) >=
              cfg.qos_floor * (1.0 - 1e-9));
        CHECK(rep.beams.squaredNorm() <= cfg.tx_power * (1.0 + 1e-9));
      }
    }
    // the desk geometry leaves enough link budget for most draws
    CHECK(repaired >= attempts - 1);
  }

  SECTION("vacuous floor accepts the matched beams immediately") {
    ScenarioConfig cfg = make_desk_scenario();
    cfg.qos_floor = 1e-12;
    Rng rng(33);
    ChannelState cs = sample_channels(rng, cfg);
    const CVec ris = random_ris(cfg.num_ris, rng);
    CMat matched = CMat::Zero(cfg.num_antennas, cfg.num_users);
    for (int k = 0; k < cfg.num_users; ++k) {
      const CVec e = effective_user_channel(k, cs, ris);
      matched.col(k) = std::sqrt(cfg.tx_power / cfg.num_users) * (e / e.norm());
    }
    const auto rep = repair_qos_feasibility(matched, cs, ris, cfg);
    CHECK(rep.feasible);
    CHECK(rep.solves == 0);
    CHECK((rep.beams - matched).norm() == 0.0);
  }
}
