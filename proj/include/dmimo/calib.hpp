#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dmimo/errors.hpp"
#include "dmimo/ofdm.hpp"
#include "dmimo/rng.hpp"
#include "dmimo/topology.hpp"

namespace dmimo {

/// Bidirectional single-subcarrier pilot observations over the calibration
/// subgraph. Pilot symbol value is 1; both directions share the same
/// reciprocal physical channel.
struct CalibrationObservations {
  struct Edge {
    NodeId i, j;   // i < j
    cd y_ij;       // received at j when i transmits
    cd y_ji;       // received at i when j transmits
  };
  std::vector<Edge> edges;
  int n_ap = 0;
};

/// Y_{j->i} = T_j * g_{ij} * B_{ij} * R_i + Z with Z ~ CN(0, n0).
/// `pilot_amplitude` scales the transmitted pilot (the observations are
/// divided back by it, so n0 is effectively reduced by its square).
CalibrationObservations gather_observations(
    const Eigen::MatrixXd& ap_ap_gain, const Eigen::MatrixXcd& ap_ap_fading,
    const Eigen::VectorXcd& ap_tx, const Eigen::VectorXcd& ap_rx,
    const EdgeList& subgraph, double n0, Rng& rng,
    double pilot_amplitude = 1.0);

/// The Hermitian quadratic-form matrix whose minimum eigenvector solves the
/// constrained LS calibration problem.
Eigen::MatrixXcd build_A(const CalibrationObservations& observations);

struct CalibrationSolution {
  Eigen::VectorXcd c;
  std::string method;     // "ls" | "argos" | "genie"
  double residual = 0.0;  // J_cal(c)
};

/// LS cost sum |c_j Y_{j->i} - c_i Y_{i->j}|^2.
double j_cal(const CalibrationObservations& observations,
             const Eigen::VectorXcd& c);

/// Unit-norm eigenvector of the smallest eigenvalue of A, gauge-fixed so the
/// first entry is real positive. Throws DegenerateNullspace when the two
/// smallest eigenvalues are within `degeneracy_gap` relative to the trace.
CalibrationSolution solve_ls_calibration(const Eigen::MatrixXcd& a,
                                         double degeneracy_gap = 1e-6);

/// Star-topology ratio baseline: c_center = 1, c_j = Y_{center->j}/Y_{j->center},
/// then the common gauge is applied.
CalibrationSolution argos_calibration(const CalibrationObservations& observations,
                                      NodeId center, double denom_floor = 1e-12);

/// c_i = R_i / T_i from the true hardware coefficients, same gauge.
CalibrationSolution genie_calibration(const Eigen::VectorXcd& ap_tx,
                                      const Eigen::VectorXcd& ap_rx);

/// Elementwise per-antenna calibration of a transmit vector.
Eigen::VectorXcd apply_calibration(const Eigen::VectorXcd& tx,
                                   const Eigen::VectorXcd& c);

/// Unit norm, first entry rotated real-positive.
Eigen::VectorXcd gauge_fix(Eigen::VectorXcd c);

std::string calibration_to_csv(const CalibrationSolution& solution);
std::string observations_to_csv(const CalibrationObservations& observations);

}  // namespace dmimo
