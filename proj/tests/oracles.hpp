#pragma once
// Brute-force reference implementations used only by tests.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <random>
#include <vector>

#include "itsbft/bits.hpp"
#include "itsbft/topology.hpp"

namespace itsbft::oracle {

inline bool connected_without(const Graph& g, std::uint32_t removed_mask) {
  const std::size_t n = g.node_count();
  int start = -1, remaining = 0;
  for (std::size_t v = 0; v < n; ++v)
    if (!(removed_mask >> v & 1)) {
      ++remaining;
      if (start < 0) start = static_cast<int>(v);
    }
  if (remaining <= 1) return true;
  std::vector<bool> seen(n, false);
  std::vector<NodeId> stack{static_cast<NodeId>(start)};
  seen[start] = true;
  int count = 1;
  while (!stack.empty()) {
    NodeId u = stack.back();
    stack.pop_back();
    for (NodeId v : g.neighbors(u))
      if (!seen[v] && !(removed_mask >> v & 1)) {
        seen[v] = true;
        ++count;
        stack.push_back(v);
      }
  }
  return count == remaining;
}

/// Smallest node set whose removal disconnects g; N-1 when no set does.
inline std::size_t connectivity(const Graph& g) {
  const std::size_t n = g.node_count();
  std::size_t best = n - 1;
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    const auto k = static_cast<std::size_t>(__builtin_popcount(mask));
    if (k >= best || n - k < 2) continue;
    if (!connected_without(g, mask)) best = k;
  }
  return best;
}

inline bool reaches(const Graph& g, NodeId s, NodeId t, std::uint32_t removed, bool skip_direct) {
  std::vector<bool> seen(g.node_count(), false);
  std::vector<NodeId> stack{s};
  seen[s] = true;
  while (!stack.empty()) {
    NodeId u = stack.back();
    stack.pop_back();
    for (NodeId v : g.neighbors(u)) {
      if (skip_direct && ((u == s && v == t) || (u == t && v == s))) continue;
      if (v == t) return true;
      if (!seen[v] && !(removed >> v & 1)) {
        seen[v] = true;
        stack.push_back(v);
      }
    }
  }
  return false;
}

/// Local vertex connectivity by exhaustive separator search (Menger's min side).
inline std::size_t local_connectivity(const Graph& g, NodeId s, NodeId t) {
  const bool adjacent = g.has_edge(s, t);
  const std::size_t n = g.node_count();
  std::size_t best = n;
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    if ((mask >> s & 1) || (mask >> t & 1)) continue;
    const auto k = static_cast<std::size_t>(__builtin_popcount(mask));
    if (k >= best) continue;
    if (!reaches(g, s, t, mask, adjacent)) best = k;
  }
  return best + (adjacent ? 1 : 0);
}

inline std::vector<Path> all_simple_paths(const Graph& g, NodeId s, NodeId t) {
  std::vector<Path> out;
  Path cur{s};
  std::vector<bool> on(g.node_count(), false);
  on[s] = true;
  std::function<void(NodeId)> dfs = [&](NodeId u) {
    for (NodeId v : g.neighbors(u)) {
      if (on[v]) continue;
      cur.push_back(v);
      if (v == t) {
        out.push_back(cur);
      } else {
        on[v] = true;
        dfs(v);
        on[v] = false;
      }
      cur.pop_back();
    }
  };
  dfs(s);
  return out;
}

/// Maximum number of internally disjoint paths by search over path combinations.
inline std::size_t max_paths_by_enumeration(const Graph& g, NodeId s, NodeId t) {
  const auto paths = all_simple_paths(g, s, t);
  std::vector<std::uint32_t> masks;
  for (const auto& p : paths) {
    std::uint32_t m = 0;
    for (std::size_t i = 1; i + 1 < p.size(); ++i) m |= 1u << p[i];
    masks.push_back(m);
  }
  std::size_t best = 0;
  std::function<void(std::size_t, std::uint32_t, std::size_t, bool)> go = [&](std::size_t i, std::uint32_t used,
                                                                            std::size_t count, bool direct) {
    best = std::max(best, count);
    if (count + (masks.size() - i) <= best) return;
    for (std::size_t j = i; j < masks.size(); ++j) {
      const bool is_direct = masks[j] == 0;
      if (is_direct && direct) continue;
      if (masks[j] & used) continue;
      go(j + 1, used | masks[j], count + 1, direct || is_direct);
    }
  };
  go(0, 0, 0, false);
  return best;
}

inline Graph random_connected_graph(std::mt19937_64& rng, std::size_t n, double p) {
  while (true) {
    std::vector<Edge> edges;
    std::bernoulli_distribution coin(p);
    for (NodeId i = 0; i < n; ++i)
      for (NodeId j = i + 1; j < n; ++j)
        if (coin(rng)) edges.emplace_back(i, j);
    Graph g(n, edges);
    if (g.is_connected()) return g;
  }
}

/// Naive bit-by-bit modified Toeplitz product.
inline BitString toeplitz_naive(const BitString& x, std::size_t m, const BitString& t) {
  const std::size_t n = x.size(), cols = n - m;
  BitString y(m);
  for (std::size_t i = 0; i < m; ++i) {
    bool v = x.bit(i);
    for (std::size_t j = 0; j < cols; ++j) v ^= t.bit(i + cols - 1 - j) && x.bit(m + j);
    y.set(i, v);
  }
  return y;
}

inline BitString random_bits(std::mt19937_64& rng, std::size_t n) {
  BitString b(n);
  for (auto& w : b.mutable_words()) w = rng();
  b.clear_tail();
  return b;
}

inline Graph circulant(std::size_t n, std::initializer_list<std::size_t> jumps) {
  std::vector<Edge> edges;
  for (NodeId i = 0; i < n; ++i)
    for (auto j : jumps) edges.emplace_back(i, static_cast<NodeId>((i + j) % n));
  return Graph(n, edges);
}

}  // namespace itsbft::oracle
