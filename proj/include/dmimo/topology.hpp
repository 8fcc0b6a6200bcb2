#pragma once

#include <functional>
#include <map>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "dmimo/errors.hpp"

namespace dmimo {

using NodeId = int;
using EdgeList = std::vector<std::pair<NodeId, NodeId>>;  // undirected, i < j

/// AP connectivity graph. Nodes are dense integer ids 0..n-1. An undirected
/// edge is present when the average link SNR (mean pathloss, no shadowing)
/// exceeds the design threshold, so the graph is deterministic per topology.
class NetworkGraph {
 public:
  NetworkGraph(int num_nodes, std::vector<Eigen::Vector2d> positions,
               std::vector<std::vector<NodeId>> adjacency,
               Eigen::MatrixXd snr_db);

  int num_nodes() const { return num_nodes_; }
  bool has_edge(NodeId i, NodeId j) const;
  const std::vector<NodeId>& neighbors(NodeId i) const { return adj_[i]; }
  int degree(NodeId i) const { return static_cast<int>(adj_[i].size()); }
  double edge_snr_db(NodeId i, NodeId j) const { return snr_db_(i, j); }
  const std::vector<Eigen::Vector2d>& positions() const { return positions_; }
  bool has_positions() const { return !positions_.empty(); }

  EdgeList undirected_edges() const;

 private:
  int num_nodes_;
  std::vector<Eigen::Vector2d> positions_;
  std::vector<std::vector<NodeId>> adj_;
  Eigen::MatrixXd snr_db_;
};

/// Builds the graph from a symmetric average-SNR function, keeping the edges
/// above `snr_threshold_db`. Throws DisconnectedGraph if the result is not
/// connected.
NetworkGraph build_graph(
    int num_nodes, const std::vector<Eigen::Vector2d>& positions,
    double snr_threshold_db,
    const std::function<double(NodeId, NodeId)>& link_snr_db);

struct AnchorSet {
  std::vector<NodeId> anchors;  // sorted
  EdgeList induced_edges;       // edges of the anchor-induced subgraph
  bool is_anchor(NodeId i) const;
};

/// Checks the connected-cover conditions: the anchor-induced subgraph is
/// connected and every non-anchor has at least one anchor neighbor.
/// Throws NotConnectedCover naming the violated condition and nodes.
AnchorSet validate_anchor_cover(const NetworkGraph& graph,
                                std::vector<NodeId> anchors);

struct PilotAssignment {
  std::map<NodeId, int> color_of;
  int num_colors = 0;
};

/// Greedy smallest-available-color distance-2 coloring of the anchor
/// subgraph, visiting anchors in descending-degree order (ties by id).
PilotAssignment l11_coloring(const NetworkGraph& graph,
                             const AnchorSet& anchor_set);

/// True iff for every anchor i, the colors of its anchor neighbors are
/// pairwise distinct and all differ from i's own color.
bool check_l11(const NetworkGraph& graph, const AnchorSet& anchor_set,
               const PilotAssignment& assignment);

enum class SubgraphStrategy { Full, Star, Mst };

SubgraphStrategy parse_subgraph_strategy(const std::string& name);

/// Connected spanning calibration subgraph, returned as an undirected edge
/// list (both directions implied). Mst picks the maximum-SNR spanning tree.
EdgeList build_calibration_subgraph(const NetworkGraph& graph,
                                    SubgraphStrategy strategy,
                                    NodeId star_center = 0);

}  // namespace dmimo
