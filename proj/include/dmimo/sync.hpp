#pragma once

#include <map>
#include <vector>

#include <Eigen/Dense>

#include "dmimo/errors.hpp"
#include "dmimo/estimator.hpp"
#include "dmimo/topology.hpp"

namespace dmimo {

/// Paired directed measurements over the anchor edge set.
struct MeasurementSet {
  std::vector<PairwiseMeasurement> records;
};

/// Builds the weighted LS system L * Delta = u over the listed anchors for
/// the frequency problem (use_timing = false, weights beta, values d_delta)
/// or the timing problem (use_timing = true, weights gamma, values d_mu).
/// Throws UnpairedMeasurement if any directed edge lacks its reverse.
std::pair<Eigen::MatrixXd, Eigen::VectorXd> build_weighted_laplacian(
    const MeasurementSet& measurements, const std::vector<NodeId>& anchors,
    bool use_timing = false);

struct SyncSolution {
  std::map<NodeId, double> delta_corr;
  std::map<NodeId, double> mu_corr;
  NodeId reference = 0;
};

/// Solves the reduced system L_1 * xi = u (reference column dropped) by a
/// rank-revealing QR; throws RankDeficient when rank < |A| - 1.
Eigen::VectorXd solve_reduced_ls(const Eigen::MatrixXd& laplacian,
                                 const Eigen::VectorXd& u, int reference_idx);

/// Frequency and timing corrections for the anchors, zero at the reference.
SyncSolution solve_corrections(const MeasurementSet& measurements,
                               const std::vector<NodeId>& anchors,
                               NodeId reference);

/// Extends an anchor solution to the non-anchor APs: each adopts the
/// weight-averaged correction implied by its anchor neighbors' measurements.
SyncSolution propagate_to_nonanchors(const SyncSolution& solution,
                                     const NetworkGraph& graph,
                                     const AnchorSet& anchor_set,
                                     const MeasurementSet& nonanchor_meas);

/// CSV round-trip for offline inspection (columns i,j,dDelta,dMu,beta,gamma,
/// with i the receiver).
std::string measurements_to_csv(const MeasurementSet& measurements);
MeasurementSet measurements_from_csv(const std::string& text);

}  // namespace dmimo
