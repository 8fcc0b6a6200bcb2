#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dmimo/errors.hpp"
#include "dmimo/ofdm.hpp"

namespace dmimo {

/// Zero-forcing precoder G = Lambda (H^H H)^-1 H^H from the downlink channel
/// estimate H (N_a x N_u, AP-to-UT), rows normalized to unit power per user.
/// Requires N_u <= N_a; throws SingularChannel on a rank-deficient estimate.
Eigen::MatrixXcd zfbf(const Eigen::MatrixXcd& h, double cond_threshold = 1e12);

/// Conjugate (matched-filter) precoder G = Gamma H^H, rows unit-normalized.
Eigen::MatrixXcd conjugate_bf(const Eigen::MatrixXcd& h);

/// Common scale applied to the whole precoder so that no antenna exceeds
/// `per_antenna_limit` in power. Scale-down only (returns min(1, limit/max)).
double power_scale(const Eigen::MatrixXcd& g, double per_antenna_limit);

struct RateEvalInput {
  // Per subcarrier: true downlink channel and the (possibly stale) estimate
  // used for precoding, both N_a x N_u.
  std::vector<Eigen::MatrixXcd> h_true;
  std::vector<Eigen::MatrixXcd> h_est;
  std::vector<int> nu_signed;           // signed subcarrier index per entry
  Eigen::VectorXcd calibration;         // per-AP multiplier on the tx side
  std::vector<NodeClock> ap_clocks;     // residual impairments at symbol m
  std::vector<NodeClock> ut_clocks;
  std::vector<double> ap_delta_corr;    // applied tx-side corrections
  bool zero_forcing = true;
  double snr_db = 30.0;                 // per-user ratio rho (snr mode)
  double per_antenna_limit = 0.0;       // >0 enables absolute-power mode
  double noise_power = 1.0;             // receiver noise in absolute mode
  OfdmParams params;
};

struct RateResult {
  Eigen::MatrixXd rate;  // N_u x symbols evaluated, bits/s/Hz (mean over nu)
  std::vector<int> symbols;
};

/// Per-user achievable rate log2(1 + SINR) at the requested symbol indices,
/// averaged over subcarriers. The effective link is
///   M = G * diag(c) * diag(phi_residual) * H
/// with phi the AP-side rotation left after the corrections.
RateResult evaluate_rates(const RateEvalInput& input,
                          const std::vector<int>& symbols);

struct RateReport {
  struct Row {
    uint64_t trial;
    int user;
    int symbol;
    double rate;
  };
  std::vector<Row> rows;
};

std::string rate_report_to_csv(const RateReport& report);

/// Mean rate over all rows, plus per-symbol means in symbol order.
std::string rate_report_summary(const RateReport& report);

}  // namespace dmimo
