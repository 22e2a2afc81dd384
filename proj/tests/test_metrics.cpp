#include "dfrc/metrics.hpp"

#include "oracles.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace dfrc;

namespace {

struct Setup {
  ScenarioConfig cfg;
  ChannelState cs;
  Vec tx, rx;
  CMat beams;
  CVec ris;
};

Setup make_setup(std::uint64_t seed, int users = 2, int antennas = 4, int ris_elems = 8,
                 int clutter = 2) {
  Setup s;
  s.cfg = make_desk_scenario();
  s.cfg.num_users = users;
  s.cfg.num_antennas = antennas;
  s.cfg.num_ris = ris_elems;
  if (clutter == 0) {
    s.cfg.radar.clutter.clear();
    s.cfg.radar.clutter_powers = Vec();
  }
  Rng rng(seed);
  s.cs = sample_channels(rng, s.cfg);
  const auto grid = grid_layout(antennas, s.cfg.wavelength);
  s.tx = stack_positions(grid);
  s.rx = stack_positions(grid);
  for (int i = 0; i < 2 * antennas; ++i) {
    s.tx(i) += rng.uniform(-0.01, 0.01);
    s.rx(i) += rng.uniform(-0.01, 0.01);
  }
  s.cs.refresh(s.tx);
  s.beams = oracle::random_cmat(rng, antennas, users, s.cfg.tx_power / (antennas * users));
  s.ris = CVec(ris_elems);
  for (int m = 0; m < ris_elems; ++m) s.ris(m) = rng.unit_phase();
  return s;
}

}  // namespace

TEST_CASE("communication sinr") {
  Setup s = make_setup(3);

  SECTION("zero beam gives zero sinr") {
    CMat w = s.beams;
    w.col(0).setZero();
    CHECK(comm_sinr(0, w, s.ris, s.cs, s.cfg.noise_comm) == 0.0);
  }

  SECTION("single user has no interference term") {
    Setup one = make_setup(4, /*users=*/1);
    const CVec eff = effective_user_channel(0, one.cs, one.ris);
    const double expected = std::norm(eff.dot(one.beams.col(0))) / one.cfg.noise_comm;
    CHECK(comm_sinr(0, one.beams, one.ris, one.cs, one.cfg.noise_comm) ==
          Catch::Approx(expected).epsilon(1e-12));
  }

  SECTION("matches a scalar recomputation") {
    for (int k = 0; k < s.cfg.num_users; ++k) {
      // independent loop: build h_k^H V H w_j entry by entry
      Complex sig{0, 0};
      double inter = s.cfg.noise_comm;
      for (int j = 0; j < s.cfg.num_users; ++j) {
        Complex acc{0, 0};
        for (int m = 0; m < s.cfg.num_ris; ++m) {
          Complex row{0, 0};
          for (int n = 0; n < s.cfg.num_antennas; ++n)
            row += s.cs.bs_ris(m, n) * s.beams(n, j);
          acc += std::conj(s.cs.user_channels[k](m)) * s.ris(m) * row;
        }
        if (j == k)
          sig = acc;
        else
          inter += std::norm(acc);
      }
      CHECK(comm_sinr(k, s.beams, s.ris, s.cs, s.cfg.noise_comm) ==
            Catch::Approx(std::norm(sig) / inter).epsilon(1e-10));
    }
  }

  SECTION("invariant under a per-user phase rotation") {
    const double before = comm_sinr(0, s.beams, s.ris, s.cs, s.cfg.noise_comm);
    CMat w = s.beams;
    w.col(0) *= std::exp(kImag * 1.234);
    CHECK(comm_sinr(0, w, s.ris, s.cs, s.cfg.noise_comm) ==
          Catch::Approx(before).epsilon(1e-12));
  }
}

TEST_CASE("clutter covariance") {
  Setup s = make_setup(5);
  const auto& radar = s.cfg.radar;

  SECTION("no clutter gives the zero matrix") {
    Setup q0 = make_setup(6, 2, 4, 8, /*clutter=*/0);
    const CMat xi =
        clutter_covariance(q0.beams, q0.rx, q0.tx, q0.cfg.radar, q0.cfg.wavelength);
    CHECK(xi.cwiseAbs().maxCoeff() == 0.0);
  }

  SECTION("zero beams give the zero matrix") {
    const CMat xi = clutter_covariance(CMat::Zero(4, 2), s.rx, s.tx, radar, s.cfg.wavelength);
    CHECK(xi.cwiseAbs().maxCoeff() == 0.0);
  }

  SECTION("equals the per-clutter accumulation") {
    CMat ref = CMat::Zero(4, 4);
    for (int q = 0; q < radar.num_clutter(); ++q) {
      const CVec ar = steering_vector(s.rx, radar.clutter[q], s.cfg.wavelength);
      const CVec at = steering_vector(s.tx, radar.clutter[q], s.cfg.wavelength);
      const CMat aq = ar * at.adjoint();
      ref += radar.clutter_powers(q) * aq * s.beams * s.beams.adjoint() * aq.adjoint();
    }
    const CMat xi = clutter_covariance(s.beams, s.rx, s.tx, radar, s.cfg.wavelength);
    CHECK((xi - ref).cwiseAbs().maxCoeff() < 1e-12 * std::max(1.0, ref.cwiseAbs().maxCoeff()));
  }

  SECTION("hermitian and psd with noise floor") {
    CMat xi = clutter_covariance(s.beams, s.rx, s.tx, radar, s.cfg.wavelength);
    CHECK((xi - xi.adjoint()).cwiseAbs().maxCoeff() < 1e-12 * xi.cwiseAbs().maxCoeff());
    xi.diagonal().array() += s.cfg.noise_radar;
    Eigen::SelfAdjointEigenSolver<CMat> es(xi);
    CHECK(es.eigenvalues().minCoeff() >= s.cfg.noise_radar * (1.0 - 1e-9));
  }
}

TEST_CASE("mvdr filter") {
  SECTION("clutter-free case reduces to scaled response") {
    Setup s = make_setup(7, 2, 4, 8, /*clutter=*/0);
    CVec snap(4);
    Rng rng(70);
    for (int i = 0; i < 4; ++i) snap(i) = rng.cgauss(1.0);
    const CVec u = mvdr_filter(s.beams, s.rx, s.tx, s.cfg.radar, s.cfg.wavelength,
                               s.cfg.noise_radar, snap);
    const CVec expected =
        radar_response_matrix(s.rx, s.tx, s.cfg.radar.target, s.cfg.wavelength) * snap /
        s.cfg.noise_radar;
    CHECK((u - expected).cwiseAbs().maxCoeff() < 1e-9 * expected.cwiseAbs().maxCoeff());
  }

  SECTION("scalar case") {
    Setup s = make_setup(8, 1, 1, 4, 0);
    CVec snap(1);
    snap(0) = Complex{0.7, -0.2};
    const CVec u = mvdr_filter(s.beams, s.rx, s.tx, s.cfg.radar, s.cfg.wavelength,
                               s.cfg.noise_radar, snap);
    const CMat a0 = radar_response_matrix(s.rx, s.tx, s.cfg.radar.target, s.cfg.wavelength);
    CHECK(std::abs(u(0) - a0(0, 0) * snap(0) / s.cfg.noise_radar) < 1e-12 * std::abs(u(0)));
  }

  SECTION("dominates random unit filters") {
    Setup s = make_setup(9);
    Rng rng(90);
    CVec snap = s.beams * oracle::random_cvec(rng, s.cfg.num_users);
    const CVec u = mvdr_filter(s.beams, s.rx, s.tx, s.cfg.radar, s.cfg.wavelength,
                               s.cfg.noise_radar, snap);
    const double best = radar_sinr_with_filter(u, snap, s.beams, s.rx, s.tx, s.cfg.radar,
                                               s.cfg.wavelength, s.cfg.noise_radar);
    for (int t = 0; t < 1000; ++t) {
      CVec r = oracle::random_cvec(rng, 4);
      r /= r.norm();
      const double v = radar_sinr_with_filter(r, snap, s.beams, s.rx, s.tx, s.cfg.radar,
                                              s.cfg.wavelength, s.cfg.noise_radar);
      CHECK(best >= v - 1e-9 * std::abs(best));
    }
  }
}

TEST_CASE("trace-form radar sinr") {
  SECTION("zero beams") {
    Setup s = make_setup(10);
    CHECK(radar_sinr(CMat::Zero(4, 2), s.rx, s.tx, s.cfg.radar, s.cfg.wavelength,
                     s.cfg.noise_radar) == 0.0);
  }

  SECTION("clutter-free rank-1 algebra") {
    Setup s = make_setup(11, /*users=*/1, /*antennas=*/2, 8, /*clutter=*/0);
    const CVec at = steering_vector(s.tx, s.cfg.radar.target, s.cfg.wavelength);
    const double expected = s.cfg.radar.target_power * 2.0 *
                            std::norm(at.dot(s.beams.col(0))) / s.cfg.noise_radar;
    CHECK(radar_sinr(s.beams, s.rx, s.tx, s.cfg.radar, s.cfg.wavelength, s.cfg.noise_radar) ==
          Catch::Approx(expected).epsilon(1e-10));
  }

  SECTION("matches the symbol-averaged quadratic form") {
    Setup s = make_setup(12);
    const double traced =
        radar_sinr(s.beams, s.rx, s.tx, s.cfg.radar, s.cfg.wavelength, s.cfg.noise_radar);

    CMat xi = clutter_covariance(s.beams, s.rx, s.tx, s.cfg.radar, s.cfg.wavelength);
    xi.diagonal().array() += s.cfg.noise_radar;
    const CMat a0 = radar_response_matrix(s.rx, s.tx, s.cfg.radar.target, s.cfg.wavelength);
    const CMat phi = s.cfg.radar.target_power * a0.adjoint() * xi.inverse() * a0;

    Rng rng(120);
    double acc = 0.0;
    const int draws = 400000;
    for (int t = 0; t < draws; ++t) {
      const CVec x = s.beams * oracle::random_cvec(rng, s.cfg.num_users);
      acc += std::real(x.dot(phi * x));
    }
    CHECK(acc / draws == Catch::Approx(traced).epsilon(0.01));
  }

  SECTION("invariant to a common phase rotation of W") {
    Setup s = make_setup(13);
    const double before =
        radar_sinr(s.beams, s.rx, s.tx, s.cfg.radar, s.cfg.wavelength, s.cfg.noise_radar);
    const CMat rotated = s.beams * std::exp(kImag * 0.77);
    CHECK(radar_sinr(rotated, s.rx, s.tx, s.cfg.radar, s.cfg.wavelength, s.cfg.noise_radar) ==
          Catch::Approx(before).epsilon(1e-10));
  }
}

TEST_CASE("fp surrogate and auxiliary update") {
  Setup s = make_setup(14);
  const auto& cfg = s.cfg;

  SECTION("zero auxiliary gives zero") {
    CHECK(fp_objective(s.beams, s.rx, s.tx, CMat::Zero(4, 2), cfg.radar, cfg.wavelength,
                       cfg.noise_radar) == 0.0);
  }

  SECTION("tight at the closed-form optimum") {
    const CMat lam =
        optimal_aux(s.beams, s.rx, s.tx, cfg.radar, cfg.wavelength, cfg.noise_radar);
    const double fp =
        fp_objective(s.beams, s.rx, s.tx, lam, cfg.radar, cfg.wavelength, cfg.noise_radar);
    const double tr = radar_sinr(s.beams, s.rx, s.tx, cfg.radar, cfg.wavelength, cfg.noise_radar);
    CHECK(std::abs(fp - tr) <= 1e-8 * std::abs(tr));
  }

  SECTION("dominated by the radar sinr for any auxiliary") {
    const double tr = radar_sinr(s.beams, s.rx, s.tx, cfg.radar, cfg.wavelength, cfg.noise_radar);
    Rng rng(140);
    const CMat lam_star =
        optimal_aux(s.beams, s.rx, s.tx, cfg.radar, cfg.wavelength, cfg.noise_radar);
    for (int t = 0; t < 100; ++t) {
      const CMat lam = lam_star + oracle::random_cmat(rng, 4, 2, lam_star.squaredNorm() / 8.0);
      const double fp =
          fp_objective(s.beams, s.rx, s.tx, lam, cfg.radar, cfg.wavelength, cfg.noise_radar);
      CHECK(fp <= tr * (1.0 + 1e-9) + 1e-12);
    }
  }

  SECTION("closed form beats local perturbations") {
    const CMat lam_star =
        optimal_aux(s.beams, s.rx, s.tx, cfg.radar, cfg.wavelength, cfg.noise_radar);
    const double best =
        fp_objective(s.beams, s.rx, s.tx, lam_star, cfg.radar, cfg.wavelength, cfg.noise_radar);
    Rng rng(141);
    for (int t = 0; t < 500; ++t) {
      const CMat lam =
          lam_star + oracle::random_cmat(rng, 4, 2, 1e-2 * lam_star.squaredNorm() / 8.0);
      CHECK(fp_objective(s.beams, s.rx, s.tx, lam, cfg.radar, cfg.wavelength, cfg.noise_radar) <=
            best + 1e-9 * std::abs(best));
    }
  }

  SECTION("zero beams give zero auxiliary") {
    const CMat lam =
        optimal_aux(CMat::Zero(4, 2), s.rx, s.tx, cfg.radar, cfg.wavelength, cfg.noise_radar);
    CHECK(lam.cwiseAbs().maxCoeff() == 0.0);
  }

  SECTION("clutter-free auxiliary is the scaled response") {
    Setup q0 = make_setup(15, 2, 4, 8, /*clutter=*/0);
    const CMat lam = optimal_aux(q0.beams, q0.rx, q0.tx, q0.cfg.radar, q0.cfg.wavelength,
                                 q0.cfg.noise_radar);
    const CMat expected =
        radar_response_matrix(q0.rx, q0.tx, q0.cfg.radar.target, q0.cfg.wavelength) * q0.beams /
        q0.cfg.noise_radar;
    CHECK((lam - expected).cwiseAbs().maxCoeff() < 1e-9 * expected.cwiseAbs().maxCoeff());
  }
}
