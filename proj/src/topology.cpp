#include "itsbft/topology.hpp"

#include <algorithm>
#include <limits>
#include <queue>
#include <set>
#include <stdexcept>

namespace itsbft {

Graph::Graph(std::size_t node_count, const std::vector<Edge>& edges) : adjacency_(node_count) {
  std::set<Edge> seen;
  for (const auto& e : edges) {
    if (e.a == e.b) throw std::invalid_argument("Graph: self-loop on node " + std::to_string(e.a));
    if (e.b >= node_count) throw std::invalid_argument("Graph: node id " + std::to_string(e.b) + " out of range");
    if (!seen.insert(e).second)
      throw std::invalid_argument("Graph: duplicate edge " + std::to_string(e.a) + "-" + std::to_string(e.b));
  }
  edges_.assign(seen.begin(), seen.end());
  for (const auto& e : edges_) {
    adjacency_[e.a].push_back(e.b);
    adjacency_[e.b].push_back(e.a);
  }
  for (auto& adj : adjacency_) std::sort(adj.begin(), adj.end());
}

Graph Graph::complete(std::size_t n) {
  std::vector<Edge> edges;
  for (NodeId i = 0; i < n; ++i)
    for (NodeId j = i + 1; j < n; ++j) edges.emplace_back(i, j);
  return Graph(n, edges);
}

Graph Graph::ring(std::size_t n) {
  std::vector<Edge> edges;
  for (NodeId i = 0; i < n; ++i) edges.emplace_back(i, static_cast<NodeId>((i + 1) % n));
  return Graph(n, edges);
}

Graph Graph::path(std::size_t n) {
  std::vector<Edge> edges;
  for (NodeId i = 0; i + 1 < n; ++i) edges.emplace_back(i, i + 1);
  return Graph(n, edges);
}

bool Graph::has_edge(NodeId x, NodeId y) const {
  if (!contains(x) || !contains(y)) return false;
  const auto& adj = adjacency_[x];
  return std::binary_search(adj.begin(), adj.end(), y);
}

bool Graph::is_connected() const {
  if (node_count() == 0) return false;
  std::vector<bool> seen(node_count(), false);
  std::vector<NodeId> stack{0};
  seen[0] = true;
  std::size_t count = 1;
  while (!stack.empty()) {
    const NodeId u = stack.back();
    stack.pop_back();
    for (NodeId v : adjacency_[u])
      if (!seen[v]) {
        seen[v] = true;
        ++count;
        stack.push_back(v);
      }
  }
  return count == node_count();
}

Graph Graph::induced(const std::vector<bool>& keep) const {
  std::vector<Edge> kept;
  for (const auto& e : edges_)
    if (keep.at(e.a) && keep.at(e.b)) kept.push_back(e);
  return Graph(node_count(), kept);
}

namespace {

// Unit-capacity flow network over split nodes: in(v) = 2v, out(v) = 2v + 1.
class SplitFlow {
 public:
  SplitFlow(const Graph& g, NodeId s, NodeId t) : arcs_of_(2 * g.node_count()) {
    const int big = static_cast<int>(g.node_count());
    for (NodeId v = 0; v < g.node_count(); ++v) add_arc(2 * v, 2 * v + 1, (v == s || v == t) ? big : 1);
    for (NodeId u = 0; u < g.node_count(); ++u)
      for (NodeId v : g.neighbors(u)) add_arc(2 * u + 1, 2 * v, 1);
    source_ = 2 * s + 1;
    sink_ = 2 * t;
  }

  std::size_t run() {
    std::size_t flow = 0;
    while (augment()) ++flow;
    return flow;
  }

  // Follows saturated inter-node arcs from s; each flow unit is one path.
  std::vector<Path> paths(NodeId s, NodeId t, std::size_t count) {
    std::vector<Path> out;
    for (std::size_t k = 0; k < count; ++k) {
      Path p{s};
      std::size_t at = source_;
      while (p.back() != t) {
        int chosen = -1;
        for (int a : arcs_of_[at]) {
          const Arc& arc = arcs_[a];
          if (arc.forward && arc.flow > 0 && (chosen < 0 || arc.to < arcs_[chosen].to)) chosen = a;
        }
        if (chosen < 0) throw std::logic_error("max_disjoint_paths: broken flow decomposition");
        arcs_[chosen].flow -= 1;
        const NodeId next = static_cast<NodeId>(arcs_[chosen].to / 2);
        p.push_back(next);
        at = 2 * next + 1;
      }
      out.push_back(std::move(p));
    }
    return out;
  }

 private:
  struct Arc {
    std::size_t to;
    int cap;
    int flow;
    int reverse;
    bool forward;
  };

  void add_arc(std::size_t from, std::size_t to, int cap) {
    arcs_of_[from].push_back(static_cast<int>(arcs_.size()));
    arcs_.push_back({to, cap, 0, static_cast<int>(arcs_.size()) + 1, true});
    arcs_of_[to].push_back(static_cast<int>(arcs_.size()));
    arcs_.push_back({from, 0, 0, static_cast<int>(arcs_.size()) - 1, false});
  }

  bool augment() {
    std::vector<int> via(arcs_of_.size(), -1);
    std::vector<bool> seen(arcs_of_.size(), false);
    std::queue<std::size_t> q;
    q.push(source_);
    seen[source_] = true;
    while (!q.empty() && !seen[sink_]) {
      const std::size_t u = q.front();
      q.pop();
      for (int a : arcs_of_[u]) {
        const Arc& arc = arcs_[a];
        if (!seen[arc.to] && arc.cap - arc.flow > 0) {
          seen[arc.to] = true;
          via[arc.to] = a;
          q.push(arc.to);
        }
      }
    }
    if (!seen[sink_]) return false;
    for (std::size_t v = sink_; v != source_;) {
      Arc& arc = arcs_[via[v]];
      arc.flow += 1;
      arcs_[arc.reverse].flow -= 1;
      v = arcs_[arc.reverse].to;
    }
    return true;
  }

  std::vector<Arc> arcs_;
  std::vector<std::vector<int>> arcs_of_;
  std::size_t source_ = 0;
  std::size_t sink_ = 0;
};

}  // namespace

PathSet max_disjoint_paths(const Graph& g, NodeId s, NodeId t) {
  if (!g.contains(s) || !g.contains(t)) throw std::invalid_argument("max_disjoint_paths: node not in graph");
  if (s == t) throw std::invalid_argument("max_disjoint_paths: source equals target");
  SplitFlow flow(g, s, t);
  const std::size_t k = flow.run();
  PathSet ps{s, t, flow.paths(s, t, k)};
  std::sort(ps.paths.begin(), ps.paths.end(), [](const Path& x, const Path& y) {
    return x.size() != y.size() ? x.size() < y.size() : x < y;
  });
  return ps;
}

std::size_t node_connectivity(const Graph& g) {
  if (g.node_count() == 0) throw std::invalid_argument("node_connectivity: empty graph");
  if (!g.is_connected()) throw std::invalid_argument("node_connectivity: graph is disconnected");
  const std::size_t n = g.node_count();
  std::size_t best = n - 1;
  for (NodeId s = 0; s < n; ++s)
    for (NodeId t = s + 1; t < n; ++t)
      if (!g.has_edge(s, t)) best = std::min(best, max_disjoint_paths(g, s, t).size());
  return best;
}

std::size_t byzantine_capacity(const Graph& g) {
  const std::size_t c = node_connectivity(g);
  const std::size_t by_size = (g.node_count() - 1) / 3;
  return c == 0 ? 0 : std::min(c - 1, by_size);
}

bool is_valid_path_set(const Graph& g, const PathSet& ps) {
  std::set<NodeId> used_internal;
  for (const auto& p : ps.paths) {
    if (p.size() < 2 || p.front() != ps.source || p.back() != ps.target) return false;
    std::set<NodeId> in_path(p.begin(), p.end());
    if (in_path.size() != p.size()) return false;
    for (std::size_t i = 0; i + 1 < p.size(); ++i)
      if (!g.has_edge(p[i], p[i + 1])) return false;
    for (std::size_t i = 1; i + 1 < p.size(); ++i)
      if (!used_internal.insert(p[i]).second) return false;
  }
  // at most one direct s-t path
  return std::count_if(ps.paths.begin(), ps.paths.end(), [](const Path& p) { return p.size() == 2; }) <= 1;
}

}  // namespace itsbft
