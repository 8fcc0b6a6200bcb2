#pragma once

#include <vector>

#include <Eigen/Dense>

#include "dmimo/errors.hpp"
#include "dmimo/rng.hpp"
#include "dmimo/topology.hpp"

namespace dmimo {

/// Indoor-office pathloss model coefficients (dB-domain).
struct PathlossParams {
  double a;          // distance slope
  double b;          // intercept
  double c;          // carrier-frequency slope, on log10(f0/5GHz)
  double sigma2_db;  // shadowing variance, dB^2
};

inline constexpr PathlossParams kIndoorLos{18.7, 46.8, 20.0, 9.0};
inline constexpr PathlossParams kIndoorNlos{36.8, 43.8, 20.0, 16.0};

/// Pathloss in dB at distance d_m (meters) and carrier f0_ghz. Distances
/// below 3 m are clamped to PL(3). Throws NonPositiveDistance.
double pathloss_db(double d_m, double f0_ghz, const PathlossParams& params,
                   double shadowing_db = 0.0);

/// Linear amplitude gain 10^(-PL/20).
double pathloss_amplitude(double pl_db);

/// Line-of-sight probability as a function of distance, clamped to [0,1].
double p_los(double d_m);

/// Distance-dependent mean pathloss with LOS decided by p_los >= 0.5;
/// used for the deterministic average-SNR edge weights of the network graph.
double mean_pathloss_db(double d_m, double f0_ghz);

/// Per-node transmit/receive hardware coefficients. Magnitudes are uniform
/// on [1-rho, 1+rho], phases uniform on [-pi, pi].
struct HardwareCoeffs {
  Eigen::VectorXcd ap_tx, ap_rx;  // T_i, R_i
  Eigen::VectorXcd ut_tx, ut_rx;  // UT-side counterparts
};

/// Closed-form std of |x|^2 for |x| ~ U[1-rho, 1+rho]:
/// sqrt(4/3 rho^2 + 4/45 rho^4).
double magnitude_sq_std(double rho);

/// Solves magnitude_sq_std(rho) = target by bisection.
double solve_hw_spread(double target_std = 0.1);

HardwareCoeffs sample_hardware_coeffs(Rng& rng, int n_ap, int n_ut, double rho);

struct ChannelConfig {
  double f0_ghz = 5.0;      // carrier used inside the pathloss model
  int n_subcarriers = 1;
  bool shadowing = true;
};

/// One draw of large-scale gains and per-subcarrier Rayleigh fading.
/// AP-AP entries are reciprocal by construction (fading(i,j) == fading(j,i)).
struct ChannelRealization {
  Eigen::MatrixXd ap_ut_gain;               // N_a x N_u linear amplitude
  Eigen::MatrixXd ap_ap_gain;               // N_a x N_a, symmetric, 0 diagonal
  std::vector<Eigen::MatrixXcd> ap_ut_fading;  // per subcarrier, CN(0,1)
  std::vector<Eigen::MatrixXcd> ap_ap_fading;  // per subcarrier, symmetric
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> ap_ut_los;
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> ap_ap_los;
};

ChannelRealization sample_channel(Rng& rng,
                                  const std::vector<Eigen::Vector2d>& ap_pos,
                                  const std::vector<Eigen::Vector2d>& ut_pos,
                                  const ChannelConfig& config);

}  // namespace dmimo
