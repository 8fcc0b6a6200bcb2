#include "dmimo/sync.hpp"

#include <algorithm>
#include <sstream>

namespace dmimo {

namespace {

struct Directed {
  double value;   // d_delta or d_mu
  double weight;  // beta or gamma
};

// Keyed by (rx, tx).
using DirectedMap = std::map<std::pair<NodeId, NodeId>, Directed>;

DirectedMap index_measurements(const MeasurementSet& measurements,
                               bool use_timing) {
  DirectedMap map;
  for (const auto& r : measurements.records) {
    const double w = use_timing ? r.gamma : r.beta;
    if (w <= 0.0) throw ConfigError("non-positive measurement weight");
    map[{r.rx, r.tx}] = {use_timing ? r.d_mu : r.d_delta, w};
  }
  return map;
}

}  // namespace

std::pair<Eigen::MatrixXd, Eigen::VectorXd> build_weighted_laplacian(
    const MeasurementSet& measurements, const std::vector<NodeId>& anchors,
    bool use_timing) {
  const int na = static_cast<int>(anchors.size());
  std::map<NodeId, int> idx;
  for (int i = 0; i < na; ++i) idx[anchors[i]] = i;

  const DirectedMap meas = index_measurements(measurements, use_timing);
  for (const auto& [key, unused] : meas) {
    (void)unused;
    if (!idx.count(key.first) || !idx.count(key.second))
      throw ConfigError("measurement references a node outside the anchor set");
    if (!meas.count({key.second, key.first}))
      throw UnpairedMeasurement("missing reverse measurement for edge " +
                                std::to_string(key.second) + "->" +
                                std::to_string(key.first));
  }

  Eigen::MatrixXd laplacian = Eigen::MatrixXd::Zero(na, na);
  Eigen::VectorXd u = Eigen::VectorXd::Zero(na);
  for (const auto& [key, m_ji] : meas) {
    const auto [i, j] = key;  // measurement j -> i, received at i
    if (i == j) throw ConfigError("self-loop measurement");
    const Directed& m_ij = meas.at({j, i});
    const int a = idx.at(i), b = idx.at(j);
    // Each undirected edge is visited twice (once per direction); accumulate
    // the per-direction halves so the pair sums to (w_ij + w_ji).
    laplacian(a, a) += m_ji.weight;
    laplacian(a, b) -= m_ji.weight;
    laplacian(b, b) += m_ji.weight;
    laplacian(b, a) -= m_ji.weight;
    // u_i gains +w_ij * d_{i->j} - w_ji * d_{j->i}; accumulate the terms
    // owned by this directed record on both endpoints.
    u[a] -= m_ji.weight * m_ji.value;
    u[b] += m_ji.weight * m_ji.value;
  }

  // Connectivity of the measured anchor graph.
  std::vector<std::vector<int>> adj(na);
  for (const auto& [key, unused] : meas) {
    (void)unused;
    adj[idx.at(key.first)].push_back(idx.at(key.second));
  }
  std::vector<bool> seen(na, false);
  std::vector<int> stack{0};
  seen[0] = true;
  while (!stack.empty()) {
    int v = stack.back();
    stack.pop_back();
    for (int w : adj[v])
      if (!seen[w]) {
        seen[w] = true;
        stack.push_back(w);
      }
  }
  if (std::find(seen.begin(), seen.end(), false) != seen.end())
    throw DisconnectedAnchorGraph("measured anchor graph is not connected");

  return {laplacian, u};
}

Eigen::VectorXd solve_reduced_ls(const Eigen::MatrixXd& laplacian,
                                 const Eigen::VectorXd& u, int reference_idx) {
  const int na = static_cast<int>(laplacian.rows());
  Eigen::MatrixXd reduced(na, na - 1);
  int col = 0;
  for (int j = 0; j < na; ++j)
    if (j != reference_idx) reduced.col(col++) = laplacian.col(j);

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(reduced);
  qr.setThreshold(1e-10);
  if (qr.rank() < na - 1)
    throw RankDeficient("Laplacian rank below |A|-1; anchor graph disconnected");
  return qr.solve(u);
}

SyncSolution solve_corrections(const MeasurementSet& measurements,
                               const std::vector<NodeId>& anchors,
                               NodeId reference) {
  const auto it = std::find(anchors.begin(), anchors.end(), reference);
  if (it == anchors.end()) throw ConfigError("reference is not an anchor");
  const int ref_idx = static_cast<int>(it - anchors.begin());

  SyncSolution sol;
  sol.reference = reference;
  for (bool timing : {false, true}) {
    auto [laplacian, u] = build_weighted_laplacian(measurements, anchors, timing);
    const Eigen::VectorXd xi = solve_reduced_ls(laplacian, u, ref_idx);
    auto& out = timing ? sol.mu_corr : sol.delta_corr;
    int col = 0;
    for (int j = 0; j < static_cast<int>(anchors.size()); ++j)
      out[anchors[j]] = (j == ref_idx) ? 0.0 : xi[col++];
  }
  return sol;
}

SyncSolution propagate_to_nonanchors(const SyncSolution& solution,
                                     const NetworkGraph& graph,
                                     const AnchorSet& anchor_set,
                                     const MeasurementSet& nonanchor_meas) {
  SyncSolution full = solution;
  std::map<std::pair<NodeId, NodeId>, const PairwiseMeasurement*> by_edge;
  for (const auto& r : nonanchor_meas.records) by_edge[{r.rx, r.tx}] = &r;

  for (NodeId v = 0; v < graph.num_nodes(); ++v) {
    if (anchor_set.is_anchor(v)) continue;
    double wsum = 0.0, delta_acc = 0.0;
    double gsum = 0.0, mu_acc = 0.0;
    for (NodeId a : graph.neighbors(v)) {
      if (!anchor_set.is_anchor(a)) continue;
      auto it = by_edge.find({v, a});  // pilot from anchor a, heard at v
      if (it == by_edge.end()) continue;
      const auto& m = *it->second;
      // d_delta estimates Delta_a - Delta_v, so the implied correction for v
      // is the anchor's correction minus the measured difference.
      delta_acc += m.beta * (solution.delta_corr.at(a) - m.d_delta);
      wsum += m.beta;
      mu_acc += m.gamma * (solution.mu_corr.at(a) - m.d_mu);
      gsum += m.gamma;
    }
    if (wsum <= 0.0)
      throw NoAnchorNeighbor("non-anchor " + std::to_string(v) +
                             " has no measured anchor neighbor");
    full.delta_corr[v] = delta_acc / wsum;
    full.mu_corr[v] = mu_acc / gsum;
  }
  return full;
}

std::string measurements_to_csv(const MeasurementSet& measurements) {
  std::ostringstream os;
  os.precision(17);
  os << "i,j,dDelta,dMu,beta,gamma\n";
  for (const auto& r : measurements.records)
    os << r.rx << ',' << r.tx << ',' << r.d_delta << ',' << r.d_mu << ','
       << r.beta << ',' << r.gamma << '\n';
  return os.str();
}

MeasurementSet measurements_from_csv(const std::string& text) {
  MeasurementSet set;
  std::istringstream is(text);
  std::string line;
  bool header = true;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (header) {
      header = false;
      continue;
    }
    PairwiseMeasurement m;
    std::istringstream ls(line);
    char comma;
    if (!(ls >> m.rx >> comma >> m.tx >> comma >> m.d_delta >> comma >>
          m.d_mu >> comma >> m.beta >> comma >> m.gamma))
      throw ConfigError("malformed measurement CSV line: " + line);
    set.records.push_back(m);
  }
  return set;
}

}  // namespace dmimo
