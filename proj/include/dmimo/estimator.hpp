#pragma once

#include <vector>

#include <Eigen/Dense>

#include "dmimo/errors.hpp"
#include "dmimo/ofdm.hpp"
#include "dmimo/rng.hpp"
#include "dmimo/topology.hpp"

namespace dmimo {

/// Synchronization pilot burst: two repetitions of nc/4 unit-modulus QPSK
/// chips separated by nc/2 zeros, for nc chips total.
Eigen::VectorXcd make_pilot_burst(int nc, uint64_t seed);

/// Triangular chip autocorrelation pulse, max(0, 1 - |t|).
double tri(double t);

/// Signal matrix Gamma(dxi, dmu) = Xi(dxi) * S * Tri(dmu), of size
/// m_len x P. `delay_chips` are the known path delays in chips; dmu and dxi
/// are the normalized timing (chips) and frequency (cycles/chip) offsets.
Eigen::MatrixXcd build_signal_matrix(double dxi, double dmu,
                                     const Eigen::VectorXcd& pilot,
                                     const std::vector<double>& delay_chips,
                                     int m_len);

struct GridSpec {
  double dxi_half_range = 5e-3;   // cycles/chip
  double dxi_step = 0.0;          // 0 -> 1/(4*m_len)
  double dmu_min = -8.0;          // chips
  double dmu_max = 8.0;
  double dmu_step = 0.25;
  int refine_passes = 4;          // each pass shrinks the step by 8x
  double gram_cond_threshold = 1e10;
};

struct EstimationResult {
  double dxi = 0.0;
  double dmu = 0.0;
  Eigen::VectorXcd h_hat;
  double objective = 0.0;
};

/// Joint ML estimate of (dxi, dmu) by maximizing the projection energy
/// F = y^H Gamma (Gamma^H Gamma)^-1 Gamma^H y over a 2-D grid with local
/// refinement. Ties break toward the lexicographically lowest (dxi, dmu).
EstimationResult ml_estimate(const Eigen::VectorXcd& y,
                             const Eigen::VectorXcd& pilot,
                             const std::vector<double>& delay_chips,
                             const GridSpec& grid);

/// Projection objective at a single grid point, exposed for tests.
double projection_objective(const Eigen::VectorXcd& y,
                            const Eigen::VectorXcd& pilot,
                            const std::vector<double>& delay_chips, double dxi,
                            double dmu);

struct CrbResult {
  double var_dxi = 0.0;
  double var_dmu = 0.0;
  Eigen::MatrixXd fisher;  // 2(P+1) x 2(P+1), parameter order
                           // (dxi, dmu, Re h_0, Im h_0, ...)
};

/// Exact Cramer-Rao bound for the joint estimation problem.
CrbResult crb(double dxi, double dmu, const Eigen::VectorXcd& h,
              const Eigen::VectorXcd& pilot,
              const std::vector<double>& delay_chips, int m_len, double n0);

struct PairwiseConfig {
  int nc = 256;
  int guard_chips = 32;       // observation window extension, m_len = nc+guard
  double snr_db = 30.0;
  bool crb_weights = false;   // false -> uniform beta = gamma = 1/2
  uint64_t pilot_seed = 1;
  GridSpec grid;
};

/// One directed TO/CFO measurement tx -> rx over a single-path channel with
/// complex coefficient h_coeff. Returns the estimates in the Delta / mu
/// conventions together with the LS weights.
struct PairwiseMeasurement {
  NodeId rx = 0;
  NodeId tx = 0;
  double d_delta = 0.0;  // estimate of Delta_tx - Delta_rx
  double d_mu = 0.0;     // estimate of mu_tx - mu_rx
  double beta = 0.5;
  double gamma = 0.5;
};

PairwiseMeasurement pairwise_measure(NodeId tx_id, NodeId rx_id,
                                     const NodeClock& tx, const NodeClock& rx,
                                     cd h_coeff, const OfdmParams& params,
                                     const PairwiseConfig& config, Rng& rng);

}  // namespace dmimo
