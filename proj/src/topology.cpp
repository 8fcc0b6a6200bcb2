#include "dmimo/topology.hpp"

#include <algorithm>
#include <numeric>
#include <queue>
#include <set>

namespace dmimo {

namespace {

// Connectivity over an adjacency-list graph restricted to `allowed` nodes.
// Returns the set of nodes reachable from `start`.
std::vector<bool> reachable(const std::vector<std::vector<NodeId>>& adj,
                            const std::vector<bool>& allowed, NodeId start) {
  std::vector<bool> seen(adj.size(), false);
  std::queue<NodeId> q;
  seen[start] = true;
  q.push(start);
  while (!q.empty()) {
    NodeId v = q.front();
    q.pop();
    for (NodeId w : adj[v]) {
      if (allowed[w] && !seen[w]) {
        seen[w] = true;
        q.push(w);
      }
    }
  }
  return seen;
}

}  // namespace

NetworkGraph::NetworkGraph(int num_nodes,
                           std::vector<Eigen::Vector2d> positions,
                           std::vector<std::vector<NodeId>> adjacency,
                           Eigen::MatrixXd snr_db)
    : num_nodes_(num_nodes),
      positions_(std::move(positions)),
      adj_(std::move(adjacency)),
      snr_db_(std::move(snr_db)) {
  for (auto& nb : adj_) std::sort(nb.begin(), nb.end());
}

bool NetworkGraph::has_edge(NodeId i, NodeId j) const {
  const auto& nb = adj_[i];
  return std::binary_search(nb.begin(), nb.end(), j);
}

EdgeList NetworkGraph::undirected_edges() const {
  EdgeList edges;
  for (NodeId i = 0; i < num_nodes_; ++i)
    for (NodeId j : adj_[i])
      if (i < j) edges.emplace_back(i, j);
  return edges;
}

NetworkGraph build_graph(
    int num_nodes, const std::vector<Eigen::Vector2d>& positions,
    double snr_threshold_db,
    const std::function<double(NodeId, NodeId)>& link_snr_db) {
  if (num_nodes < 1) throw ConfigError("build_graph: need at least one node");
  std::vector<std::vector<NodeId>> adj(num_nodes);
  Eigen::MatrixXd snr = Eigen::MatrixXd::Constant(
      num_nodes, num_nodes, -std::numeric_limits<double>::infinity());
  for (NodeId i = 0; i < num_nodes; ++i) {
    for (NodeId j = i + 1; j < num_nodes; ++j) {
      const double s = link_snr_db(i, j);
      if (s > snr_threshold_db) {
        adj[i].push_back(j);
        adj[j].push_back(i);
        snr(i, j) = snr(j, i) = s;
      }
    }
  }
  std::vector<bool> allowed(num_nodes, true);
  auto seen = reachable(adj, allowed, 0);
  if (std::find(seen.begin(), seen.end(), false) != seen.end())
    throw DisconnectedGraph("build_graph: graph is not connected at threshold " +
                            std::to_string(snr_threshold_db) + " dB");
  return NetworkGraph(num_nodes, positions, std::move(adj), std::move(snr));
}

bool AnchorSet::is_anchor(NodeId i) const {
  return std::binary_search(anchors.begin(), anchors.end(), i);
}

AnchorSet validate_anchor_cover(const NetworkGraph& graph,
                                std::vector<NodeId> anchors) {
  std::sort(anchors.begin(), anchors.end());
  anchors.erase(std::unique(anchors.begin(), anchors.end()), anchors.end());
  if (anchors.empty()) throw NotConnectedCover("anchor set is empty");
  for (NodeId a : anchors)
    if (a < 0 || a >= graph.num_nodes())
      throw ConfigError("anchor id out of range: " + std::to_string(a));

  std::vector<bool> is_anchor(graph.num_nodes(), false);
  for (NodeId a : anchors) is_anchor[a] = true;

  // Condition 1: anchor-induced subgraph connected.
  std::vector<std::vector<NodeId>> adj(graph.num_nodes());
  for (NodeId a : anchors)
    for (NodeId b : graph.neighbors(a))
      if (is_anchor[b]) adj[a].push_back(b);
  auto seen = reachable(adj, is_anchor, anchors.front());
  std::string stragglers;
  for (NodeId a : anchors)
    if (!seen[a]) stragglers += " " + std::to_string(a);
  if (!stragglers.empty())
    throw NotConnectedCover("anchor subgraph disconnected; unreachable anchors:" +
                            stragglers);

  // Condition 2: every non-anchor dominated by an anchor.
  std::string uncovered;
  for (NodeId v = 0; v < graph.num_nodes(); ++v) {
    if (is_anchor[v]) continue;
    bool covered = false;
    for (NodeId w : graph.neighbors(v))
      if (is_anchor[w]) { covered = true; break; }
    if (!covered) uncovered += " " + std::to_string(v);
  }
  if (!uncovered.empty())
    throw NotConnectedCover("non-anchor nodes without anchor neighbor:" +
                            uncovered);

  AnchorSet result;
  result.anchors = std::move(anchors);
  for (NodeId a : result.anchors)
    for (NodeId b : graph.neighbors(a))
      if (a < b && is_anchor[b]) result.induced_edges.emplace_back(a, b);
  return result;
}

PilotAssignment l11_coloring(const NetworkGraph& graph,
                             const AnchorSet& anchor_set) {
  const auto& anchors = anchor_set.anchors;
  // Anchor-subgraph neighbor lists.
  std::map<NodeId, std::vector<NodeId>> adj;
  for (NodeId a : anchors) {
    auto& nb = adj[a];
    for (NodeId b : graph.neighbors(a))
      if (anchor_set.is_anchor(b)) nb.push_back(b);
  }
  std::vector<NodeId> order(anchors.begin(), anchors.end());
  std::sort(order.begin(), order.end(), [&](NodeId a, NodeId b) {
    if (adj[a].size() != adj[b].size()) return adj[a].size() > adj[b].size();
    return a < b;
  });

  PilotAssignment pa;
  for (NodeId a : order) {
    std::set<int> forbidden;
    for (NodeId b : adj[a]) {
      if (auto it = pa.color_of.find(b); it != pa.color_of.end())
        forbidden.insert(it->second);
      for (NodeId c : adj[b]) {
        if (c == a) continue;
        if (auto it = pa.color_of.find(c); it != pa.color_of.end())
          forbidden.insert(it->second);
      }
    }
    int color = 0;
    while (forbidden.count(color)) ++color;
    pa.color_of[a] = color;
    pa.num_colors = std::max(pa.num_colors, color + 1);
  }
  return pa;
}

bool check_l11(const NetworkGraph& graph, const AnchorSet& anchor_set,
               const PilotAssignment& assignment) {
  for (NodeId a : anchor_set.anchors) {
    auto it_a = assignment.color_of.find(a);
    if (it_a == assignment.color_of.end()) return false;
    std::set<int> seen;
    for (NodeId b : graph.neighbors(a)) {
      if (!anchor_set.is_anchor(b)) continue;
      auto it_b = assignment.color_of.find(b);
      if (it_b == assignment.color_of.end()) return false;
      if (it_b->second == it_a->second) return false;
      if (!seen.insert(it_b->second).second) return false;
    }
  }
  return true;
}

SubgraphStrategy parse_subgraph_strategy(const std::string& name) {
  if (name == "full") return SubgraphStrategy::Full;
  if (name == "star") return SubgraphStrategy::Star;
  if (name == "mst") return SubgraphStrategy::Mst;
  throw InvalidStrategy("unknown calibration subgraph strategy: " + name);
}

EdgeList build_calibration_subgraph(const NetworkGraph& graph,
                                    SubgraphStrategy strategy,
                                    NodeId star_center) {
  const int n = graph.num_nodes();
  switch (strategy) {
    case SubgraphStrategy::Full:
      return graph.undirected_edges();
    case SubgraphStrategy::Star: {
      if (star_center < 0 || star_center >= n)
        throw InvalidStrategy("star center out of range");
      EdgeList edges;
      for (NodeId j = 0; j < n; ++j) {
        if (j == star_center) continue;
        if (!graph.has_edge(star_center, j))
          throw DisconnectedGraph(
              "star subgraph: node " + std::to_string(j) +
              " is not a neighbor of the center");
        edges.emplace_back(std::min(star_center, j), std::max(star_center, j));
      }
      return edges;
    }
    case SubgraphStrategy::Mst: {
      // Prim over negative SNR: maximum-SNR spanning tree.
      std::vector<bool> in_tree(n, false);
      std::vector<double> best(n, -std::numeric_limits<double>::infinity());
      std::vector<NodeId> parent(n, -1);
      in_tree[0] = true;
      for (NodeId j : graph.neighbors(0)) {
        best[j] = graph.edge_snr_db(0, j);
        parent[j] = 0;
      }
      EdgeList edges;
      for (int step = 1; step < n; ++step) {
        NodeId pick = -1;
        for (NodeId v = 0; v < n; ++v)
          if (!in_tree[v] && best[v] > -std::numeric_limits<double>::infinity() &&
              (pick < 0 || best[v] > best[pick]))
            pick = v;
        if (pick < 0) throw DisconnectedGraph("mst: graph is not connected");
        in_tree[pick] = true;
        edges.emplace_back(std::min(parent[pick], pick),
                           std::max(parent[pick], pick));
        for (NodeId j : graph.neighbors(pick)) {
          if (!in_tree[j] && graph.edge_snr_db(pick, j) > best[j]) {
            best[j] = graph.edge_snr_db(pick, j);
            parent[j] = pick;
          }
        }
      }
      std::sort(edges.begin(), edges.end());
      return edges;
    }
  }
  throw InvalidStrategy("unreachable");
}

}  // namespace dmimo
