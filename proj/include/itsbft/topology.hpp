#pragma once

#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

namespace itsbft {

using NodeId = std::uint32_t;

/// Undirected link between two relays, stored with a < b.
struct Edge {
  NodeId a = 0;
  NodeId b = 0;

  Edge() = default;
  Edge(NodeId x, NodeId y) : a(x < y ? x : y), b(x < y ? y : x) {}

  bool touches(NodeId n) const noexcept { return a == n || b == n; }
  NodeId other(NodeId n) const noexcept { return n == a ? b : a; }
  friend auto operator<=>(const Edge&, const Edge&) = default;
};

using Path = std::vector<NodeId>;

/// Relay graph. Node ids are 0..node_count-1; no self-loops or duplicate
/// edges. Connectivity is not a construction invariant (disclosure graphs
/// may be disconnected); scenario topologies check it separately.
class Graph {
 public:
  Graph() = default;
  Graph(std::size_t node_count, const std::vector<Edge>& edges);

  static Graph complete(std::size_t n);
  static Graph ring(std::size_t n);
  static Graph path(std::size_t n);

  std::size_t node_count() const noexcept { return adjacency_.size(); }
  const std::vector<Edge>& edges() const noexcept { return edges_; }
  /// Neighbors in ascending id order.
  const std::vector<NodeId>& neighbors(NodeId n) const { return adjacency_.at(n); }
  bool has_edge(NodeId x, NodeId y) const;
  bool contains(NodeId n) const noexcept { return n < node_count(); }
  bool is_connected() const;

  /// Same node ids, keeping only edges whose endpoints are both in keep.
  Graph induced(const std::vector<bool>& keep) const;

  friend bool operator==(const Graph&, const Graph&) = default;

 private:
  std::vector<Edge> edges_;
  std::vector<std::vector<NodeId>> adjacency_;
};

/// Internally vertex-disjoint s-t paths.
struct PathSet {
  NodeId source = 0;
  NodeId target = 0;
  std::vector<Path> paths;

  std::size_t size() const noexcept { return paths.size(); }
};

/// Minimum number of node removals that disconnects g (N-1 for complete
/// graphs). Throws std::invalid_argument for empty or disconnected graphs.
std::size_t node_connectivity(const Graph& g);

/// Maximum set of internally vertex-disjoint s-t paths (Menger), found by
/// unit-capacity max-flow on the split-node graph. Output is deterministic:
/// augmentations scan neighbors in ascending order and the final paths are
/// sorted by (length, node sequence).
PathSet max_disjoint_paths(const Graph& g, NodeId s, NodeId t);

/// min(C - 1, floor((N - 1) / 3)), clamped at zero.
std::size_t byzantine_capacity(const Graph& g);

/// Checks every PathSet invariant against g.
bool is_valid_path_set(const Graph& g, const PathSet& ps);

}  // namespace itsbft
