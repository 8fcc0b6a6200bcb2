#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>
#include <vector>

#include "dmimo/calib.hpp"
#include "dmimo/channel.hpp"
#include "dmimo/config.hpp"
#include "dmimo/estimator.hpp"
#include "dmimo/experiments.hpp"
#include "dmimo/mumimo.hpp"
#include "dmimo/ofdm.hpp"
#include "dmimo/result_table.hpp"
#include "dmimo/rng.hpp"
#include "dmimo/sync.hpp"
#include "dmimo/topology.hpp"

using namespace dmimo;

namespace {

// 8x8 unit-spacing grid with nearest-neighbor links.
NetworkGraph grid_graph(int side) {
  std::vector<Eigen::Vector2d> pos;
  for (int r = 0; r < side; ++r)
    for (int c = 0; c < side; ++c) pos.emplace_back(c, r);
  return build_graph(side * side, pos, -1.5, [&](NodeId i, NodeId j) {
    return -(pos[i] - pos[j]).norm();
  });
}

// Complete graph on n nodes with constant edge SNR.
NetworkGraph complete_graph(int n, double snr_db = 10.0) {
  std::vector<Eigen::Vector2d> pos(n, Eigen::Vector2d::Zero());
  return build_graph(n, pos, 0.0, [&](NodeId, NodeId) { return snr_db; });
}

NetworkGraph cycle_graph(int n) {
  std::vector<Eigen::Vector2d> pos(n, Eigen::Vector2d::Zero());
  return build_graph(n, pos, 0.0, [&](NodeId i, NodeId j) {
    const int d = std::abs(i - j);
    return (d == 1 || d == n - 1) ? 10.0 : -10.0;
  });
}

std::vector<NodeId> all_nodes(const NetworkGraph& g) {
  std::vector<NodeId> ids(g.num_nodes());
  std::iota(ids.begin(), ids.end(), 0);
  return ids;
}

// Noiseless paired measurements from true per-node offsets over given edges.
MeasurementSet exact_measurements(const std::vector<double>& delta,
                                  const std::vector<double>& mu,
                                  const EdgeList& edges) {
  MeasurementSet set;
  for (auto [i, j] : edges) {
    PairwiseMeasurement fwd;  // i transmits, j receives
    fwd.tx = i;
    fwd.rx = j;
    fwd.d_delta = delta[i] - delta[j];
    fwd.d_mu = mu[i] - mu[j];
    set.records.push_back(fwd);
    PairwiseMeasurement bwd = fwd;
    std::swap(bwd.tx, bwd.rx);
    bwd.d_delta = -fwd.d_delta;
    bwd.d_mu = -fwd.d_mu;
    set.records.push_back(bwd);
  }
  return set;
}

Eigen::MatrixXcd random_matrix(Rng& rng, int rows, int cols) {
  Eigen::MatrixXcd m(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m(r, c) = rng.cnormal();
  return m;
}

RateEvalInput basic_rate_input(const Eigen::MatrixXcd& h, double snr_db) {
  RateEvalInput in;
  in.h_true = {h};
  in.h_est = {h};
  in.nu_signed = {0};
  in.calibration = Eigen::VectorXcd::Ones(h.rows());
  in.ap_clocks.assign(h.rows(), NodeClock{});
  in.ut_clocks.assign(h.cols(), NodeClock{});
  in.snr_db = snr_db;
  return in;
}

}  // namespace

TEST_SUITE("topology") {
  TEST_CASE("maximum-snr spanning tree of the 8x8 grid has 63 edges") {
    const NetworkGraph g = grid_graph(8);
    const EdgeList mst = build_calibration_subgraph(g, SubgraphStrategy::Mst);
    CHECK(mst.size() == 63);
    // All tree edges are graph edges.
    for (auto [i, j] : mst) CHECK(g.has_edge(i, j));
  }

  TEST_CASE("star subgraph uses every center link and requires full coverage") {
    const NetworkGraph g = complete_graph(6);
    const EdgeList star =
        build_calibration_subgraph(g, SubgraphStrategy::Star, 2);
    CHECK(star.size() == 5);
    for (auto [i, j] : star) CHECK((i == 2 || j == 2));
    const NetworkGraph ring = cycle_graph(6);
    CHECK_THROWS_AS(build_calibration_subgraph(ring, SubgraphStrategy::Star, 0),
                    DisconnectedGraph);
  }

  TEST_CASE("full subgraph returns all undirected edges") {
    const NetworkGraph g = complete_graph(5);
    CHECK(build_calibration_subgraph(g, SubgraphStrategy::Full).size() == 10);
  }

  TEST_CASE("subgraph strategy parsing") {
    CHECK(parse_subgraph_strategy("mst") == SubgraphStrategy::Mst);
    CHECK_THROWS_AS(parse_subgraph_strategy("ring"), InvalidStrategy);
  }

  TEST_CASE("clique coloring needs exactly k colors") {
    for (int k : {3, 4, 6}) {
      const NetworkGraph g = complete_graph(k);
      const AnchorSet anchors = validate_anchor_cover(g, all_nodes(g));
      const PilotAssignment pa = l11_coloring(g, anchors);
      CHECK(pa.num_colors == k);
      CHECK(check_l11(g, anchors, pa));
    }
  }

  TEST_CASE("cycle of six: greedy valid, hand-built 3-coloring accepted") {
    const NetworkGraph g = cycle_graph(6);
    const AnchorSet anchors = validate_anchor_cover(g, all_nodes(g));
    const PilotAssignment pa = l11_coloring(g, anchors);
    CHECK(pa.num_colors <= 4);
    CHECK(check_l11(g, anchors, pa));
    PilotAssignment hand;
    for (NodeId v = 0; v < 6; ++v) hand.color_of[v] = v % 3;
    hand.num_colors = 3;
    CHECK(check_l11(g, anchors, hand));
    // Two adjacent nodes sharing a color must be rejected.
    hand.color_of[1] = 0;
    CHECK_FALSE(check_l11(g, anchors, hand));
  }

  TEST_CASE("anchor cover validation rejects bad covers") {
    const NetworkGraph g = cycle_graph(6);
    // Opposite nodes: induced subgraph disconnected.
    CHECK_THROWS_AS(validate_anchor_cover(g, {0, 3}), NotConnectedCover);
    // Two adjacent anchors leave nodes 3 and 4 uncovered.
    CHECK_THROWS_AS(validate_anchor_cover(g, {0, 1}), NotConnectedCover);
    // Half the cycle covers everything.
    const AnchorSet ok = validate_anchor_cover(g, {0, 1, 2, 3, 4});
    CHECK(ok.induced_edges.size() == 4);
  }
}

TEST_SUITE("channel") {
  TEST_CASE("pathloss reference values") {
    CHECK(pathloss_db(3.0, 5.0, kIndoorLos) ==
          doctest::Approx(18.7 * std::log10(3.0) + 46.8).epsilon(1e-12));
    CHECK(pathloss_db(10.0, 5.0, kIndoorNlos) ==
          doctest::Approx(80.6).epsilon(1e-12));
    // Sub-3 m distances are clamped.
    CHECK(pathloss_db(1.0, 5.0, kIndoorLos) ==
          pathloss_db(3.0, 5.0, kIndoorLos));
    // Carrier term scales with log10(f0 / 5 GHz).
    CHECK(pathloss_db(10.0, 2.5, kIndoorNlos) ==
          doctest::Approx(80.6 + 20.0 * std::log10(0.5)).epsilon(1e-12));
    CHECK_THROWS_AS(pathloss_db(0.0, 5.0, kIndoorLos), NonPositiveDistance);
    CHECK(pathloss_amplitude(80.0) == doctest::Approx(1e-4).epsilon(1e-12));
  }

  TEST_CASE("line-of-sight probability is a valid probability") {
    CHECK(p_los(10.0) > 0.0);
    CHECK(p_los(10.0) < 1.0);
    CHECK(p_los(0.5) <= 1.0);
    CHECK(p_los(1e4) >= 0.0);
    // Mean pathloss blends the regimes without throwing across the range.
    for (double d : {0.5, 3.0, 10.0, 70.0}) CHECK(mean_pathloss_db(d, 5.0) > 0);
  }

  TEST_CASE("hardware magnitude spread: closed form and Monte Carlo") {
    const double rho = 0.2;
    const double expect =
        std::sqrt(4.0 / 3.0 * rho * rho + 4.0 / 45.0 * std::pow(rho, 4));
    CHECK(magnitude_sq_std(rho) == doctest::Approx(expect).epsilon(1e-12));
    const double solved = solve_hw_spread(0.1);
    CHECK(magnitude_sq_std(solved) == doctest::Approx(0.1).epsilon(1e-9));

    Rng rng(11);
    std::vector<double> sq;
    while (sq.size() < 10000) {
      const HardwareCoeffs hw = sample_hardware_coeffs(rng, 64, 16, solved);
      for (int i = 0; i < hw.ap_tx.size(); ++i)
        sq.push_back(std::norm(hw.ap_tx[i]));
    }
    const double mean = std::accumulate(sq.begin(), sq.end(), 0.0) / sq.size();
    double var = 0.0;
    for (double v : sq) var += (v - mean) * (v - mean);
    const double std_dev = std::sqrt(var / sq.size());
    CHECK(std_dev > 0.08);
    CHECK(std_dev < 0.12);
  }

  TEST_CASE("small-scale fading is unit variance and AP-AP reciprocal") {
    Rng rng(3);
    const std::vector<Eigen::Vector2d> aps = {{0, 0}, {8, 0}, {0, 8}};
    const std::vector<Eigen::Vector2d> uts = {{4, 4}};
    ChannelConfig cfg;
    cfg.shadowing = false;
    double acc = 0.0;
    const int draws = 40000;
    for (int t = 0; t < draws; ++t) {
      const ChannelRealization ch = sample_channel(rng, aps, uts, cfg);
      acc += std::norm(ch.ap_ut_fading[0](0, 0));
      if (t == 0) {
        CHECK(ch.ap_ap_fading[0](0, 1) == ch.ap_ap_fading[0](1, 0));
        CHECK(ch.ap_ap_gain(0, 1) == ch.ap_ap_gain(1, 0));
        CHECK(ch.ap_ap_gain(1, 1) == 0.0);
        CHECK(ch.ap_ut_gain.rows() == 3);
      }
    }
    CHECK(acc / draws == doctest::Approx(1.0).epsilon(0.02));
  }
}

TEST_SUITE("ofdm") {
  const OfdmParams params;

  TEST_CASE("normalized offsets") {
    const auto a = normalized_offsets({25e-9, 0.0}, params);
    CHECK(a.mu == doctest::Approx(1.0).epsilon(1e-12));
    const auto b = normalized_offsets({0.0, 800.0}, params);
    CHECK(b.delta == doctest::Approx(1.6e-3).epsilon(1e-12));
    CHECK(b.Delta == doctest::Approx(61.25 * 1.6e-3).epsilon(1e-12));
    CHECK(params.kappa() == doctest::Approx(61.25).epsilon(1e-12));
  }

  TEST_CASE("rotation conjugate symmetry and single-term values") {
    const NodeClock ci{13e-9, 312.0}, cj{-4e-9, -211.0};
    for (int m : {0, 1, 7})
      for (int nu : {-32, -5, 0, 17}) {
        const cd fwd = effective_rotation(ci, cj, params, m, nu);
        const cd bwd = effective_rotation(cj, ci, params, m, nu);
        CHECK(std::abs(fwd * bwd - cd(1.0, 0.0)) < 1e-12);
        CHECK(std::abs(std::abs(fwd) - 1.0) < 1e-12);
        CHECK(std::abs(phi_entry(ci, params, m, nu) *
                           theta_entry(ci, params, m, nu) -
                       cd(1.0, 0.0)) < 1e-12);
      }
    // Delta_i = 0.01 -> phi[1, 0] advances by exactly 2*pi*0.01.
    const double eps = 0.01 / (params.kappa() * params.block_len() * params.ts());
    const cd phi = phi_entry({0.0, eps}, params, 1, 0);
    CHECK(std::abs(phi - std::polar(1.0, 2.0 * M_PI * 0.01)) < 1e-12);
  }

  TEST_CASE("perfect per-symbol corrections leave a common residual") {
    // With tau = 0 and Delta_corr = Delta_i - Delta_ref, the corrected
    // rotation of every AP collapses onto the reference AP's rotation.
    Rng rng(5);
    std::vector<NodeClock> clocks(4);
    for (auto& c : clocks) c.eps = rng.uniform(-800.0, 800.0);
    const auto ref = normalized_offsets(clocks[0], params);
    for (int m : {1, 13, 60})
      for (int nu : {-32, 0, 9}) {
        const cd base = phi_entry(clocks[0], params, m, nu);
        for (int i = 1; i < 4; ++i) {
          const auto oi = normalized_offsets(clocks[i], params);
          const cd res = phi_entry(clocks[i], params, m, nu) *
                         tx_correction(oi.Delta - ref.Delta, params, m, nu);
          CHECK(std::abs(res - base) < 1e-9);
        }
      }
  }

  TEST_CASE("fft/ifft round trip") {
    Rng rng(7);
    Eigen::VectorXcd x(64);
    for (int i = 0; i < 64; ++i) x[i] = rng.cnormal();
    CHECK((fft(ifft(x)) - x).cwiseAbs().maxCoeff() < 1e-10);
  }

  TEST_CASE("ideal synthesis reproduces the transmitted symbols") {
    Rng rng(9);
    std::vector<Eigen::VectorXcd> tx(3);
    for (auto& s : tx) {
      s.resize(params.n);
      for (int k = 0; k < params.n; ++k) s[k] = rng.cnormal();
    }
    const std::vector<MultipathTap> taps = {{cd(1.0, 0.0), 0.0}};
    const Eigen::MatrixXcd rx =
        synthesize_rx(tx, taps, NodeClock{}, NodeClock{}, params, 0.0, rng);
    const Eigen::MatrixXcd y = demodulate(rx, params);
    for (int m = 0; m < 3; ++m)
      CHECK((y.row(m).transpose() - tx[m]).cwiseAbs().maxCoeff() < 1e-9);
    CHECK_THROWS_AS(
        synthesize_rx(tx, {{cd(1.0, 0.0), 20 * params.ts()}},
                      NodeClock{}, NodeClock{}, params, 0.0, rng),
        TimingOutsideCp);
  }

  TEST_CASE("small CFO: demodulated symbol advance matches the rotation model") {
    // One active subcarrier at a time so the only deviation from the
    // frequency-domain model is the self-attenuation of the DFT window.
    const double cfo_hz = 0.01 * params.subcarrier_spacing();
    NodeClock tx_clock{2.0 * params.ts(), cfo_hz / params.kappa()};
    NodeClock rx_clock{};
    Rng rng(1);
    for (int bin : {0, 3, 31, 33, 60}) {
      std::vector<Eigen::VectorXcd> tx(
          4, Eigen::VectorXcd::Zero(params.n));
      for (auto& s : tx) s[bin] = cd(1.0, 0.5);
      const Eigen::MatrixXcd y = demodulate(
          synthesize_rx(tx, {{cd(1.0, 0.0), 0.0}}, tx_clock, rx_clock, params,
                        0.0, rng),
          params);
      const int nu = bin_to_signed(bin, params.n);
      for (int m = 0; m + 1 < 4; ++m) {
        const cd measured = y(m + 1, bin) * std::conj(y(m, bin));
        const cd model = effective_rotation(tx_clock, rx_clock, params, m + 1, nu) *
                         std::conj(effective_rotation(tx_clock, rx_clock,
                                                      params, m, nu));
        CHECK(std::abs(std::arg(measured * std::conj(model))) < 1e-3);
        CHECK(std::abs(measured) / std::norm(y(m, bin)) ==
              doctest::Approx(1.0).epsilon(0.01));
      }
    }
  }

  TEST_CASE("timing offset phase slope across subcarriers") {
    // Integer-chip timing offset: phase difference between two demodulated
    // subcarriers follows exp(-j 2 pi (s1 - s2) mu).
    NodeClock tx_clock{3.0 * params.ts(), 0.0};
    Rng rng(2);
    std::vector<cd> values;
    const int bins[2] = {5, 40};
    for (int bin : bins) {
      std::vector<Eigen::VectorXcd> tx(1, Eigen::VectorXcd::Zero(params.n));
      tx[0][bin] = cd(1.0, 0.0);
      const Eigen::MatrixXcd y = demodulate(
          synthesize_rx(tx, {{cd(1.0, 0.0), 0.0}}, tx_clock, NodeClock{},
                        params, 0.0, rng),
          params);
      values.push_back(y(0, bin));
    }
    const double s1 = signed_subcarrier(bin_to_signed(bins[0], params.n), params.n);
    const double s2 = signed_subcarrier(bin_to_signed(bins[1], params.n), params.n);
    const double expect = -2.0 * M_PI * (s1 - s2) * 3.0;
    const double measured = std::arg(values[0] * std::conj(values[1]));
    CHECK(std::abs(std::remainder(measured - expect, 2.0 * M_PI)) < 1e-9);
  }

  TEST_CASE("worst-case 802.11 CFO: far-bin leakage at least 30 dB down") {
    NodeClock tx_clock{0.0, 98e3 / params.kappa()};
    Rng rng(4);
    const int bin = 10;
    std::vector<Eigen::VectorXcd> tx(1, Eigen::VectorXcd::Zero(params.n));
    tx[0][bin] = cd(1.0, 0.0);
    const Eigen::MatrixXcd y = demodulate(
        synthesize_rx(tx, {{cd(1.0, 0.0), 0.0}}, tx_clock, NodeClock{}, params,
                      0.0, rng),
        params);
    const double signal = std::norm(y(0, bin));
    for (int k = 0; k < params.n; ++k) {
      int dist = std::abs(k - bin);
      dist = std::min(dist, params.n - dist);
      if (dist < 16) continue;
      CHECK(std::norm(y(0, k)) < signal * 1e-3);
    }
  }
}

TEST_SUITE("estimator") {
  const int kNc = 256;
  const int kGuard = 32;

  TEST_CASE("pilot burst layout") {
    const Eigen::VectorXcd burst = make_pilot_burst(kNc, 1);
    REQUIRE(burst.size() == kNc);
    for (int i = 0; i < kNc / 4; ++i) {
      CHECK(std::abs(std::abs(burst[i]) - 1.0) < 1e-12);
      CHECK(burst[i] == burst[i + 3 * kNc / 4]);
    }
    for (int i = kNc / 4; i < 3 * kNc / 4; ++i) CHECK(burst[i] == cd(0.0, 0.0));
    CHECK_THROWS_AS(make_pilot_burst(30, 1), ConfigError);
  }

  TEST_CASE("triangular pulse straddling: dmu = 0.5 splits evenly") {
    CHECK(tri(0.5) == doctest::Approx(0.5));
    CHECK(tri(-0.5) == doctest::Approx(0.5));
    CHECK(tri(1.5) == 0.0);
    const Eigen::VectorXcd pilot = make_pilot_burst(kNc, 1);
    const Eigen::MatrixXcd gamma =
        build_signal_matrix(0.0, 0.5, pilot, {0.0}, kNc + kGuard);
    // First chip: half the pilot's first sample; second chip: half of
    // (first + second).
    CHECK(std::abs(gamma(0, 0) - 0.5 * pilot[0]) < 1e-12);
    CHECK(std::abs(gamma(1, 0) - 0.5 * (pilot[0] + pilot[1])) < 1e-12);
  }

  TEST_CASE("noiseless joint estimate recovers the true offsets") {
    const Eigen::VectorXcd pilot = make_pilot_burst(kNc, 1);
    const std::vector<double> delays = {kGuard / 2.0};
    Rng rng(21);
    for (int trial = 0; trial < 4; ++trial) {
      const double dxi = rng.uniform(-2e-3, 2e-3);
      const double dmu = rng.uniform(-3.0, 3.0);
      Eigen::VectorXcd h(1);
      h[0] = std::polar(1.0, rng.uniform(-M_PI, M_PI));
      const Eigen::VectorXcd y =
          build_signal_matrix(dxi, dmu, pilot, delays, kNc + kGuard) * h;
      const EstimationResult est = ml_estimate(y, pilot, delays, GridSpec{});
      CHECK(std::abs(est.dxi - dxi) < 5e-7);
      CHECK(std::abs(est.dmu - dmu) < 2e-4);
      CHECK(std::abs(est.h_hat[0] - h[0]) < 1e-3);
    }
  }

  TEST_CASE("projection objective peaks at the truth") {
    const Eigen::VectorXcd pilot = make_pilot_burst(kNc, 1);
    const std::vector<double> delays = {kGuard / 2.0};
    Eigen::VectorXcd h(1);
    h[0] = cd(0.8, -0.3);
    const Eigen::VectorXcd y =
        build_signal_matrix(1e-3, 0.75, pilot, delays, kNc + kGuard) * h;
    const double at_truth = projection_objective(y, pilot, delays, 1e-3, 0.75);
    CHECK(at_truth == doctest::Approx(y.squaredNorm()).epsilon(1e-9));
    CHECK(projection_objective(y, pilot, delays, 1e-3, 1.75) < at_truth);
    CHECK(projection_objective(y, pilot, delays, 2.5e-3, 0.75) < at_truth);
  }

  TEST_CASE("bound matches an independently computed regression value") {
    // Multipath profile centered in the guard window, generic off-grid
    // operating point, 20 dB window-average SNR. The reference variances were
    // produced by a finite-difference reimplementation of the Fisher matrix
    // (tests/crb_oracle.py) and frozen here.
    const Eigen::VectorXcd pilot = make_pilot_burst(kNc, 1);
    Eigen::VectorXcd h(6);
    h << 1.0, 0.5, -0.2, 0.1, -0.05, -0.005;
    std::vector<double> delays = {0.0, 1.75, 3.56, 7.90, 10.72, 15.30};
    for (double& d : delays) d += kGuard / 2.0;
    const double n0 = 0.0044036487499999975;
    const CrbResult bound =
        crb(1e-4, 0.3, h, pilot, delays, kNc + kGuard, n0);
    CHECK(bound.var_dxi ==
          doctest::Approx(4.6256917779178075e-11).epsilon(1e-5));
    CHECK(bound.var_dmu ==
          doctest::Approx(9.4852447124401342e-06).epsilon(1e-5));
    CHECK(bound.fisher.rows() == 14);
    CHECK((bound.fisher - bound.fisher.transpose()).cwiseAbs().maxCoeff() <
          1e-6 * bound.fisher.cwiseAbs().maxCoeff());
  }

  TEST_CASE("bound is invariant to a global phase on the channel") {
    const Eigen::VectorXcd pilot = make_pilot_burst(kNc, 1);
    Eigen::VectorXcd h(2);
    h << cd(1.0, 0.0), cd(0.4, 0.1);
    const std::vector<double> delays = {16.0, 19.5};
    const CrbResult a = crb(0.0, 0.2, h, pilot, delays, kNc + kGuard, 1e-2);
    const CrbResult b = crb(0.0, 0.2, h * std::polar(1.0, 0.77), pilot, delays,
                            kNc + kGuard, 1e-2);
    CHECK(a.var_dxi == doctest::Approx(b.var_dxi).epsilon(1e-9));
    CHECK(a.var_dmu == doctest::Approx(b.var_dmu).epsilon(1e-9));
    CHECK_THROWS_AS(
        crb(0.0, 0.0, h, pilot, {1.0}, kNc + kGuard, 1e-2),
        DimensionMismatch);
  }

  TEST_CASE("pairwise measurement error is CRB-limited at 30 dB") {
    const OfdmParams params;
    PairwiseConfig cfg;
    cfg.crb_weights = true;
    NodeClock tx{1.2 * params.ts(), 300.0};
    NodeClock rx{-0.7 * params.ts(), -150.0};
    const auto otx = normalized_offsets(tx, params);
    const auto orx = normalized_offsets(rx, params);
    Rng rng(31);
    std::vector<double> err_delta, err_mu;
    double beta = 0.0, gamma = 0.0;
    for (int t = 0; t < 300; ++t) {
      const PairwiseMeasurement m = pairwise_measure(
          0, 1, tx, rx, std::polar(1.0, rng.uniform(-M_PI, M_PI)), params, cfg,
          rng);
      err_delta.push_back(m.d_delta - (otx.Delta - orx.Delta));
      err_mu.push_back(m.d_mu - (otx.mu - orx.mu));
      beta = m.beta;
      gamma = m.gamma;
    }
    auto rms = [](const std::vector<double>& v) {
      double acc = 0.0;
      for (double x : v) acc += x * x;
      return std::sqrt(acc / v.size());
    };
    // beta and gamma are the inverse CRB variances of d_delta and d_mu.
    CHECK(rms(err_delta) < 2.0 / std::sqrt(beta));
    CHECK(rms(err_delta) > 0.3 / std::sqrt(beta));
    CHECK(rms(err_mu) < 2.0 / std::sqrt(gamma));
  }
}

TEST_SUITE("sync") {
  TEST_CASE("two anchors with unit weights build the 2x2 Laplacian") {
    MeasurementSet set = exact_measurements({0.0, 0.3}, {0.0, 1.0}, {{0, 1}});
    for (auto& r : set.records) r.beta = r.gamma = 1.0;
    const auto [l, u] = build_weighted_laplacian(set, {0, 1});
    CHECK(l(0, 0) == doctest::Approx(2.0));
    CHECK(l(0, 1) == doctest::Approx(-2.0));
    CHECK(l(1, 0) == doctest::Approx(-2.0));
    CHECK(l(1, 1) == doctest::Approx(2.0));
  }

  TEST_CASE("noiseless recovery on a random connected anchor graph") {
    Rng rng(17);
    const int n = 6;
    EdgeList edges;
    for (int v = 1; v < n; ++v)
      edges.emplace_back(static_cast<NodeId>(rng.uniform_int(v)), v);
    edges.emplace_back(0, n - 1);
    std::vector<double> delta(n), mu(n);
    for (int v = 0; v < n; ++v) {
      delta[v] = rng.uniform(-0.1, 0.1);
      mu[v] = rng.uniform(-4.0, 4.0);
    }
    const MeasurementSet set = exact_measurements(delta, mu, edges);
    std::vector<NodeId> anchors(n);
    std::iota(anchors.begin(), anchors.end(), 0);
    const SyncSolution sol = solve_corrections(set, anchors, 0);
    for (int v = 0; v < n; ++v) {
      CHECK(sol.delta_corr.at(v) ==
            doctest::Approx(delta[v] - delta[0]).epsilon(1e-12));
      CHECK(sol.mu_corr.at(v) == doctest::Approx(mu[v] - mu[0]).epsilon(1e-12));
    }
  }

  TEST_CASE("translation invariance: shifting all clocks changes nothing") {
    const EdgeList edges = {{0, 1}, {1, 2}, {0, 2}};
    const std::vector<double> delta = {0.01, -0.02, 0.05};
    const std::vector<double> mu = {1.0, 2.0, -0.5};
    std::vector<double> delta_shift = delta, mu_shift = mu;
    for (double& d : delta_shift) d += 0.123;
    for (double& m : mu_shift) m += 7.0;
    const SyncSolution a =
        solve_corrections(exact_measurements(delta, mu, edges), {0, 1, 2}, 0);
    const SyncSolution b = solve_corrections(
        exact_measurements(delta_shift, mu_shift, edges), {0, 1, 2}, 0);
    for (NodeId v : {0, 1, 2}) {
      CHECK(a.delta_corr.at(v) == doctest::Approx(b.delta_corr.at(v)));
      CHECK(a.mu_corr.at(v) == doctest::Approx(b.mu_corr.at(v)));
    }
  }

  TEST_CASE("single edge: solution is the symmetrized directed average") {
    MeasurementSet set;
    PairwiseMeasurement fwd;  // received at 0, transmitted by 1
    fwd.rx = 0;
    fwd.tx = 1;
    fwd.d_delta = 0.31;
    fwd.d_mu = 1.4;
    PairwiseMeasurement bwd;
    bwd.rx = 1;
    bwd.tx = 0;
    bwd.d_delta = -0.27;
    bwd.d_mu = -1.6;
    set.records = {fwd, bwd};
    const SyncSolution sol = solve_corrections(set, {0, 1}, 0);
    CHECK(sol.delta_corr.at(1) ==
          doctest::Approx(0.5 * (fwd.d_delta - bwd.d_delta)).epsilon(1e-12));
    CHECK(sol.mu_corr.at(1) ==
          doctest::Approx(0.5 * (fwd.d_mu - bwd.d_mu)).epsilon(1e-12));
  }

  TEST_CASE("unpaired and disconnected measurement sets are rejected") {
    MeasurementSet set;
    PairwiseMeasurement only;
    only.rx = 0;
    only.tx = 1;
    set.records = {only};
    CHECK_THROWS_AS(build_weighted_laplacian(set, {0, 1}),
                    UnpairedMeasurement);
    // Two disjoint pairs over four anchors.
    MeasurementSet split =
        exact_measurements({0, 0.1, 0.2, 0.3}, {0, 1, 2, 3}, {{0, 1}, {2, 3}});
    CHECK_THROWS_AS(build_weighted_laplacian(split, {0, 1, 2, 3}),
                    DisconnectedAnchorGraph);
  }

  TEST_CASE("non-anchors adopt the weighted mean of implied corrections") {
    const NetworkGraph g = complete_graph(3);
    const AnchorSet anchors = validate_anchor_cover(g, {0, 1});
    SyncSolution base;
    base.reference = 0;
    base.delta_corr = {{0, 0.0}, {1, 0.2}};
    base.mu_corr = {{0, 0.0}, {1, 1.0}};
    MeasurementSet meas;
    PairwiseMeasurement from0;  // anchor 0's pilot heard at node 2
    from0.rx = 2;
    from0.tx = 0;
    from0.d_delta = -0.05;  // Delta_0 - Delta_2
    from0.d_mu = -0.5;
    PairwiseMeasurement from1;
    from1.rx = 2;
    from1.tx = 1;
    from1.d_delta = 0.11;
    from1.d_mu = 0.7;
    meas.records = {from0, from1};
    const SyncSolution full =
        propagate_to_nonanchors(base, g, anchors, meas);
    // Implied corrections: 0.0 - (-0.05) and 0.2 - 0.11, averaged.
    CHECK(full.delta_corr.at(2) ==
          doctest::Approx(0.5 * (0.05 + 0.09)).epsilon(1e-12));
    CHECK(full.mu_corr.at(2) ==
          doctest::Approx(0.5 * (0.5 + 0.3)).epsilon(1e-12));
    MeasurementSet none;
    CHECK_THROWS_AS(propagate_to_nonanchors(base, g, anchors, none),
                    NoAnchorNeighbor);
  }

  TEST_CASE("measurement CSV round trip") {
    MeasurementSet set =
        exact_measurements({0.0, 0.25}, {0.0, -2.0}, {{0, 1}});
    set.records[0].beta = 3.5;
    set.records[0].gamma = 0.125;
    const MeasurementSet back =
        measurements_from_csv(measurements_to_csv(set));
    REQUIRE(back.records.size() == set.records.size());
    for (size_t i = 0; i < set.records.size(); ++i) {
      CHECK(back.records[i].rx == set.records[i].rx);
      CHECK(back.records[i].tx == set.records[i].tx);
      CHECK(back.records[i].d_delta == set.records[i].d_delta);
      CHECK(back.records[i].d_mu == set.records[i].d_mu);
      CHECK(back.records[i].beta == set.records[i].beta);
    }
  }
}

TEST_SUITE("calib") {
  // Observations implied by hardware (t, r) and reciprocal channels b over
  // the given edges, with no noise.
  CalibrationObservations noiseless_obs(const Eigen::VectorXcd& t,
                                        const Eigen::VectorXcd& r,
                                        const EdgeList& edges, Rng& rng) {
    const int n = static_cast<int>(t.size());
    Eigen::MatrixXd gain = Eigen::MatrixXd::Ones(n, n);
    gain.diagonal().setZero();
    Eigen::MatrixXcd fading(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        fading(i, j) = fading(j, i) = rng.cnormal();
    return gather_observations(gain, fading, t, r, edges, 0.0, rng);
  }

  TEST_CASE("unit observations on one edge build the 2x2 quadratic form") {
    CalibrationObservations obs;
    obs.n_ap = 2;
    obs.edges = {{0, 1, cd(1.0, 0.0), cd(1.0, 0.0)}};
    const Eigen::MatrixXcd a = build_A(obs);
    CHECK(a(0, 0) == cd(1.0, 0.0));
    CHECK(a(0, 1) == cd(-1.0, 0.0));
    CHECK(a(1, 0) == cd(-1.0, 0.0));
    CHECK(a(1, 1) == cd(1.0, 0.0));
  }

  TEST_CASE("quadratic form is Hermitian bit-exactly") {
    Rng rng(41);
    Eigen::VectorXcd t = random_matrix(rng, 5, 1), r = random_matrix(rng, 5, 1);
    const NetworkGraph g = complete_graph(5);
    const CalibrationObservations obs =
        noiseless_obs(t, r, g.undirected_edges(), rng);
    const Eigen::MatrixXcd a = build_A(obs);
    for (int i = 0; i < 5; ++i)
      for (int j = 0; j < 5; ++j) CHECK(a(i, j) == std::conj(a(j, i)));
  }

  TEST_CASE("noiseless observations: true coefficients span the nullspace") {
    Rng rng(43);
    const int n = 12;
    Eigen::VectorXcd t = random_matrix(rng, n, 1), r = random_matrix(rng, n, 1);
    // Random spanning tree plus a few chords.
    EdgeList edges;
    for (int v = 1; v < n; ++v)
      edges.emplace_back(static_cast<NodeId>(rng.uniform_int(v)), v);
    edges.emplace_back(0, n - 1);
    const CalibrationObservations obs = noiseless_obs(t, r, edges, rng);
    const Eigen::MatrixXcd a = build_A(obs);
    const Eigen::VectorXcd c_true = gauge_fix(r.cwiseQuotient(t));
    CHECK((a * c_true).cwiseAbs().maxCoeff() < 1e-9 * a.cwiseAbs().maxCoeff());
    CHECK(j_cal(obs, c_true) < 1e-18);

    const CalibrationSolution sol = solve_ls_calibration(a);
    CHECK(std::abs(sol.c.dot(c_true)) >= 1.0 - 1e-9);
    CHECK(sol.residual <= 1e-12 * a.trace().real());
    const CalibrationSolution genie = genie_calibration(t, r);
    CHECK(std::abs(sol.c.dot(genie.c)) >= 1.0 - 1e-9);
  }

  TEST_CASE("cost scales quadratically and gauge fixing normalizes") {
    Rng rng(47);
    Eigen::VectorXcd t = random_matrix(rng, 4, 1), r = random_matrix(rng, 4, 1);
    const NetworkGraph g = complete_graph(4);
    const CalibrationObservations obs =
        noiseless_obs(t, r, g.undirected_edges(), rng);
    const Eigen::VectorXcd c = random_matrix(rng, 4, 1);
    CHECK(j_cal(obs, c * cd(0.0, 3.0)) ==
          doctest::Approx(9.0 * j_cal(obs, c)).epsilon(1e-9));
    const Eigen::VectorXcd fixed = gauge_fix(c);
    CHECK(fixed.norm() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(fixed[0].imag() == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(fixed[0].real() > 0.0);
    CHECK_THROWS_AS(gauge_fix(Eigen::VectorXcd::Zero(3)),
                    DegenerateNullspace);
  }

  TEST_CASE("star-ratio baseline: exact without noise, fragile center link") {
    Rng rng(53);
    const int n = 4;
    Eigen::VectorXcd t = random_matrix(rng, n, 1), r = random_matrix(rng, n, 1);
    EdgeList star = {{0, 1}, {0, 2}, {0, 3}};
    const CalibrationObservations clean = noiseless_obs(t, r, star, rng);
    const CalibrationSolution ref = genie_calibration(t, r);
    const CalibrationSolution ratio = argos_calibration(clean, 0);
    CHECK(std::abs(ratio.c.dot(ref.c)) >= 1.0 - 1e-9);

    // Weak center->1 link: the ratio estimate of c_1 only ever sees the weak
    // edge, while the LS eigenvector can also lean on node 1's other edges.
    EdgeList full = {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}};
    Eigen::MatrixXd gain = Eigen::MatrixXd::Ones(n, n);
    gain(0, 1) = gain(1, 0) = 0.1;
    gain.diagonal().setZero();
    double var_ratio = 0.0, var_ls = 0.0;
    const int draws = 300;
    for (int d = 0; d < draws; ++d) {
      Eigen::MatrixXcd fading(n, n);
      for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
          fading(i, j) = fading(j, i) = rng.cnormal();
      const CalibrationObservations obs = gather_observations(
          gain, fading, t, r, full, 1e-4, rng);
      const cd truth = ref.c[1];
      var_ratio += std::norm(argos_calibration(obs, 0).c[1] - truth);
      var_ls += std::norm(solve_ls_calibration(build_A(obs)).c[1] - truth);
    }
    CHECK(var_ratio / draws > 4.0 * var_ls / draws);

    CalibrationObservations zero = clean;
    zero.edges[0].y_ij = zero.edges[0].y_ji = cd(0.0, 0.0);
    CHECK_THROWS_AS(argos_calibration(zero, 0), ZeroDenominator);
  }

  TEST_CASE("calibrated zero-forcing from uplink estimates is diagonal") {
    // With c = R/T the downlink effective channel seen through the uplink
    // estimate differs only by a per-user column scale, so the uplink-based
    // zero-forcing precoder stays diagonalizing.
    Rng rng(59);
    const int na = 6, nu = 3;
    const Eigen::VectorXcd t = random_matrix(rng, na, 1);
    const Eigen::VectorXcd r = random_matrix(rng, na, 1);
    const Eigen::VectorXcd ut_t = random_matrix(rng, nu, 1);
    const Eigen::VectorXcd ut_r = random_matrix(rng, nu, 1);
    const Eigen::MatrixXcd prop = random_matrix(rng, na, nu);
    const Eigen::MatrixXcd h_ul =
        r.asDiagonal() * prop * ut_t.asDiagonal();
    const Eigen::MatrixXcd h_dl =
        t.asDiagonal() * prop * ut_r.asDiagonal();
    const Eigen::VectorXcd c = genie_calibration(t, r).c;
    const Eigen::MatrixXcd g = zfbf(h_ul);
    const Eigen::MatrixXcd m = g * c.asDiagonal() * h_dl;
    for (int i = 0; i < nu; ++i)
      for (int j = 0; j < nu; ++j)
        if (i != j) CHECK(std::abs(m(i, j)) < 1e-9 * std::abs(m(j, j)));
    CHECK(apply_calibration(Eigen::VectorXcd::Ones(na), c) == c);
  }
}

TEST_SUITE("mumimo") {
  TEST_CASE("zero-forcing removes inter-user leakage, rows unit norm") {
    Rng rng(61);
    const Eigen::MatrixXcd h = random_matrix(rng, 4, 4);
    const Eigen::MatrixXcd g = zfbf(h);
    const Eigen::MatrixXcd m = g * h;
    for (int i = 0; i < 4; ++i) {
      CHECK(g.row(i).norm() == doctest::Approx(1.0).epsilon(1e-12));
      for (int j = 0; j < 4; ++j)
        if (i != j) CHECK(std::abs(m(i, j)) <= 1e-10 * m.norm());
    }
    CHECK_THROWS_AS(zfbf(random_matrix(rng, 3, 5)), ConfigError);
    Eigen::MatrixXcd rank1 = Eigen::MatrixXcd::Zero(4, 2);
    rank1.col(0) = random_matrix(rng, 4, 1);
    rank1.col(1) = 2.0 * rank1.col(0);
    CHECK_THROWS_AS(zfbf(rank1), SingularChannel);
  }

  TEST_CASE("conjugate beamformer is the optimal single-user beamformer") {
    Rng rng(67);
    const Eigen::MatrixXcd h = random_matrix(rng, 6, 1);
    const Eigen::MatrixXcd g = conjugate_bf(h);
    const double best = std::abs((g * h)(0, 0));
    for (int t = 0; t < 30; ++t) {
      Eigen::MatrixXcd w = random_matrix(rng, 1, 6);
      w /= w.norm();
      CHECK(std::abs((w * h)(0, 0)) <= best + 1e-12);
    }
    // Orthogonal columns: conjugate and zero-forcing rows are colinear.
    Eigen::MatrixXcd ortho(4, 2);
    ortho << 1, 0, 0, 1, 0, 0, 0, 0;
    const Eigen::MatrixXcd gc = conjugate_bf(ortho), gz = zfbf(ortho);
    for (int u = 0; u < 2; ++u)
      CHECK(std::abs(gc.row(u).dot(gz.row(u))) ==
            doctest::Approx(1.0).epsilon(1e-12));
  }

  TEST_CASE("common power scaling") {
    Eigen::MatrixXcd g(2, 2);
    g << 0.5, 0.0, 0.0, 0.5;
    CHECK(power_scale(g, 1.0) == doctest::Approx(1.0));
    g(0, 0) = std::sqrt(2.0);  // one antenna at twice the limit
    CHECK(power_scale(g, 1.0) == doctest::Approx(1.0 / std::sqrt(2.0)));
    CHECK_THROWS_AS(power_scale(g, 0.0), ConfigError);
  }

  TEST_CASE("ideal zero-forcing: interference-free rate, constant over time") {
    Rng rng(71);
    const Eigen::MatrixXcd h = random_matrix(rng, 4, 4);
    RateEvalInput in = basic_rate_input(h, 20.0);
    const RateResult res = evaluate_rates(in, {0, 10, 59});
    // Perfect CSI and no impairments: the effective matrix is the diagonal
    // of per-user gains lambda_k left by the row-normalized zero-forcer, so
    // each user sees exactly log2(1 + rho * lambda_k^2) at every symbol.
    const Eigen::MatrixXcd lambda = zfbf(h) * h;
    for (int u = 0; u < 4; ++u) {
      const double expect = std::log2(1.0 + 100.0 * std::norm(lambda(u, u)));
      for (int s = 0; s < 3; ++s)
        CHECK(res.rate(u, s) == doctest::Approx(expect).epsilon(1e-9));
    }
  }

  TEST_CASE("rates are invariant to the calibration gauge") {
    Rng rng(73);
    const Eigen::MatrixXcd h = random_matrix(rng, 4, 4);
    RateEvalInput in = basic_rate_input(h, 20.0);
    in.calibration = random_matrix(rng, 4, 1);
    in.per_antenna_limit = 100.0;
    in.noise_power = 1.0;
    const RateResult base = evaluate_rates(in, {0, 5});
    in.calibration *= std::polar(2.7, 0.4);
    const RateResult scaled = evaluate_rates(in, {0, 5});
    CHECK((base.rate - scaled.rate).cwiseAbs().maxCoeff() < 1e-9);
  }

  TEST_CASE("rate degrades monotonically with residual frequency error") {
    Rng rng(79);
    const Eigen::MatrixXcd h = random_matrix(rng, 4, 4);
    double previous = 1e9;
    for (double eps : {5.0, 20.0, 80.0}) {
      RateEvalInput in = basic_rate_input(h, 30.0);
      for (int a = 0; a < 4; ++a) in.ap_clocks[a].eps = eps * (a - 1.5);
      const RateResult res = evaluate_rates(in, {10});
      const double sum = res.rate.col(0).sum();
      CHECK(sum < previous);
      previous = sum;
    }
  }

  TEST_CASE("exact frequency corrections keep the late-symbol rate ideal") {
    Rng rng(83);
    const OfdmParams params;
    RateEvalInput in = basic_rate_input(random_matrix(rng, 4, 4), 25.0);
    in.ap_delta_corr.resize(4);
    for (int a = 0; a < 4; ++a) {
      in.ap_clocks[a].eps = rng.uniform(-800.0, 800.0);
      in.ap_delta_corr[a] = normalized_offsets(in.ap_clocks[a], params).Delta;
    }
    const RateResult res = evaluate_rates(in, {0, 1000});
    CHECK((res.rate.col(0) - res.rate.col(1)).cwiseAbs().maxCoeff() < 1e-9);
  }

  TEST_CASE("rate report serialization") {
    RateReport report;
    report.rows = {{0, 0, 0, 4.0}, {0, 1, 0, 2.0}, {1, 0, 100, 3.0}};
    const std::string csv = rate_report_to_csv(report);
    CHECK(csv.find("trial,user,m,rate") == 0);
    CHECK(csv.find("1,0,100,3") != std::string::npos);
    const std::string summary = rate_report_summary(report);
    CHECK(summary.find("m,mean_rate,n") == 0);
    CHECK(summary.find("0,3,2") != std::string::npos);
  }
}

TEST_SUITE("harness") {
  TEST_CASE("config round trip, canonical hash") {
    ExperimentConfig cfg;
    cfg.experiment = "fig5";
    cfg.seed = 42;
    cfg.fig5.nc = {64, 128};
    const std::string json = config_to_json(cfg);
    const ExperimentConfig back = parse_config(json);
    CHECK(config_to_json(back) == json);
    const std::string hash = config_hash(cfg);
    CHECK(hash.size() == 16);
    CHECK(hash == config_hash(back));
    ExperimentConfig other = cfg;
    other.seed = 43;
    CHECK(config_hash(other) != hash);
    // Key order in the input file does not matter.
    CHECK(config_hash(parse_config(R"({"seed":42,"experiment":"fig5",
        "fig5":{"nc":[64,128]}})")) == hash);
  }

  TEST_CASE("config validation") {
    CHECK_THROWS_AS(parse_config(R"({"experiment":"fig3"})"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"experimnt":"fig2"})"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"fig9":{"delays":[40.0]}})"),
                    ConfigError);
    CHECK_THROWS_AS(parse_config("{nonsense"), ConfigError);
    ExperimentConfig cfg;
    CHECK(resolved_trials(cfg) == 2000);
    cfg.experiment = "grid-cdf";
    CHECK(resolved_trials(cfg) == 200);
    cfg.trials = 7;
    CHECK(resolved_trials(cfg) == 7);
  }

  TEST_CASE("custom pipeline: empty, unknown stage, repeatable") {
    ExperimentConfig cfg;
    cfg.experiment = "custom";
    CHECK(run_custom(cfg).table.rows.empty());
    cfg.custom.pipeline = {"warp-drive"};
    CHECK_THROWS_AS(run_custom(cfg), ConfigError);
    cfg.custom.pipeline = {"pairwise", "coloring"};
    const std::string a = table_to_csv(run_custom(cfg).table, cfg);
    const std::string b = table_to_csv(run_custom(cfg).table, cfg);
    CHECK(a == b);
    CHECK(a.find("stage=coloring") != std::string::npos);
  }

  TEST_CASE("artifact header carries provenance on every output") {
    ExperimentConfig cfg;
    cfg.seed = 99;
    const std::string header = artifact_header(cfg);
    CHECK(header.find(kArtifactVersion) != std::string::npos);
    CHECK(header.find("seed=99") != std::string::npos);
    CHECK(header.find(config_hash(cfg)) != std::string::npos);
    ResultTable t;
    t.add("fig2", 1, "snr_db=0", "x", 1.0);
    t.add("fig2", 0, "snr_db=0", "x", 2.0);
    t.sort();
    CHECK(t.rows[0].trial == 0);
    const std::string csv = table_to_csv(t, cfg);
    CHECK(csv.find(header) == 0);
    CHECK(csv.find("experiment,trial,sweep,metric,value") != std::string::npos);
  }

  TEST_CASE("small fig2 run: synchronization loss is visible") {
    ExperimentConfig cfg;
    cfg.experiment = "fig2";
    cfg.trials = 6;
    cfg.fig2.snr_db = {30.0};
    cfg.fig2.n_subcarriers = 2;
    const ExperimentResult res = run_fig2(cfg);
    double ideal = 0.0, free_running = 0.0;
    int n_ideal = 0, n_free = 0;
    for (const auto& row : res.table.rows) {
      if (row.metric == "sum_rate_zf_ideal") {
        ideal += row.value;
        ++n_ideal;
      } else if (row.metric == "sum_rate_zf_free") {
        free_running += row.value;
        ++n_free;
      }
    }
    REQUIRE(n_ideal == 6);
    REQUIRE(n_free == 6);
    CHECK(free_running / n_free < ideal / n_ideal);
    CHECK(!res.rates.rows.empty());
  }
}
