#include "dmimo/channel.hpp"

#include <cmath>

namespace dmimo {

double pathloss_db(double d_m, double f0_ghz, const PathlossParams& params,
                   double shadowing_db) {
  if (d_m <= 0.0)
    throw NonPositiveDistance("pathloss_db: d = " + std::to_string(d_m));
  const double d = std::max(d_m, 3.0);  // PL(d<3) = PL(3)
  return params.a * std::log10(d) + params.b +
         params.c * std::log10(f0_ghz / 5.0) + shadowing_db;
}

double pathloss_amplitude(double pl_db) { return std::pow(10.0, -pl_db / 20.0); }

double p_los(double d_m) {
  if (d_m <= 0.0)
    throw NonPositiveDistance("p_los: d = " + std::to_string(d_m));
  if (d_m <= 2.5) return 1.0;
  const double t = 1.24 - 0.6 * std::log10(d_m);
  const double inner = 1.0 - t * t * t;
  if (inner <= 0.0) return 1.0;
  const double p = 1.0 - 0.9 * std::cbrt(inner);
  return std::clamp(p, 0.0, 1.0);
}

double mean_pathloss_db(double d_m, double f0_ghz) {
  const bool los = p_los(d_m) >= 0.5;
  return pathloss_db(d_m, f0_ghz, los ? kIndoorLos : kIndoorNlos, 0.0);
}

double magnitude_sq_std(double rho) {
  const double r2 = rho * rho;
  return std::sqrt(4.0 / 3.0 * r2 + 4.0 / 45.0 * r2 * r2);
}

double solve_hw_spread(double target_std) {
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (magnitude_sq_std(mid) < target_std ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

namespace {

Eigen::VectorXcd draw_coeffs(Rng& rng, int n, double rho) {
  Eigen::VectorXcd v(n);
  for (int i = 0; i < n; ++i) {
    const double mag = rng.uniform(1.0 - rho, 1.0 + rho);
    const double phase = rng.uniform(-M_PI, M_PI);
    v[i] = std::polar(mag, phase);
  }
  return v;
}

}  // namespace

HardwareCoeffs sample_hardware_coeffs(Rng& rng, int n_ap, int n_ut,
                                      double rho) {
  HardwareCoeffs hw;
  hw.ap_tx = draw_coeffs(rng, n_ap, rho);
  hw.ap_rx = draw_coeffs(rng, n_ap, rho);
  hw.ut_tx = draw_coeffs(rng, n_ut, rho);
  hw.ut_rx = draw_coeffs(rng, n_ut, rho);
  return hw;
}

ChannelRealization sample_channel(Rng& rng,
                                  const std::vector<Eigen::Vector2d>& ap_pos,
                                  const std::vector<Eigen::Vector2d>& ut_pos,
                                  const ChannelConfig& config) {
  const int n_ap = static_cast<int>(ap_pos.size());
  const int n_ut = static_cast<int>(ut_pos.size());
  ChannelRealization ch;
  ch.ap_ut_gain.resize(n_ap, n_ut);
  ch.ap_ap_gain = Eigen::MatrixXd::Zero(n_ap, n_ap);
  ch.ap_ut_los.resize(n_ap, n_ut);
  ch.ap_ap_los.resize(n_ap, n_ap);
  ch.ap_ap_los.setConstant(false);

  auto draw_gain = [&](double d, bool* los_out) {
    // Zero-distance links (UT placed on an AP) fall under the PL(3) clamp.
    const double dd = std::max(d, 1e-6);
    const bool los = rng.uniform() < p_los(dd);
    const auto& params = los ? kIndoorLos : kIndoorNlos;
    const double shadow =
        config.shadowing ? std::sqrt(params.sigma2_db) * rng.normal() : 0.0;
    *los_out = los;
    return pathloss_amplitude(pathloss_db(dd, config.f0_ghz, params, shadow));
  };

  for (int i = 0; i < n_ap; ++i)
    for (int k = 0; k < n_ut; ++k) {
      bool los = false;
      ch.ap_ut_gain(i, k) =
          draw_gain((ap_pos[i] - ut_pos[k]).norm(), &los);
      ch.ap_ut_los(i, k) = los;
    }
  for (int i = 0; i < n_ap; ++i)
    for (int j = i + 1; j < n_ap; ++j) {
      bool los = false;
      const double g = draw_gain((ap_pos[i] - ap_pos[j]).norm(), &los);
      ch.ap_ap_gain(i, j) = ch.ap_ap_gain(j, i) = g;
      ch.ap_ap_los(i, j) = ch.ap_ap_los(j, i) = los;
    }

  ch.ap_ut_fading.resize(config.n_subcarriers);
  ch.ap_ap_fading.resize(config.n_subcarriers);
  for (int nu = 0; nu < config.n_subcarriers; ++nu) {
    Eigen::MatrixXcd b_ut(n_ap, n_ut);
    for (int i = 0; i < n_ap; ++i)
      for (int k = 0; k < n_ut; ++k) b_ut(i, k) = rng.cnormal();
    Eigen::MatrixXcd b_ap = Eigen::MatrixXcd::Zero(n_ap, n_ap);
    for (int i = 0; i < n_ap; ++i)
      for (int j = i + 1; j < n_ap; ++j)
        b_ap(i, j) = b_ap(j, i) = rng.cnormal();
    ch.ap_ut_fading[nu] = std::move(b_ut);
    ch.ap_ap_fading[nu] = std::move(b_ap);
  }
  return ch;
}

}  // namespace dmimo
