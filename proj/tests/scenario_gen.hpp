#pragma once

// Random adversarial scenarios for the safety and liveness fuzz.

#include <algorithm>
#include <random>
#include <string>
#include <vector>

#include "itsbft/simnet.hpp"
#include "oracles.hpp"

namespace itsbft::oracle {

/// Connected graph on 4..10 nodes, f <= byzantine_capacity Byzantine nodes
/// with one or two random behaviors each, and 1..3 demands between honest
/// nodes.
inline ScenarioConfig random_scenario(std::mt19937_64& rng) {
  ScenarioConfig c;
  Graph g;
  do {
    g = random_connected_graph(rng, 4 + rng() % 7, 0.3 + 0.5 * static_cast<double>(rng() % 100) / 100.0);
  } while (byzantine_capacity(g) == 0 && rng() % 4 != 0);
  c.graph = g;
  c.seed = rng();
  c.view_limit = 8;
  const std::size_t cap = byzantine_capacity(g);
  const std::size_t f = cap == 0 ? 0 : rng() % (cap + 1);

  std::vector<NodeId> perm(g.node_count());
  for (NodeId v = 0; v < perm.size(); ++v) perm[v] = v;
  std::shuffle(perm.begin(), perm.end(), rng);
  const auto& all = all_behaviors();
  for (std::size_t k = 0; k < f; ++k) {
    c.adversary.byzantine_set.insert(perm[k]);
    auto& bs = c.adversary.behaviors[perm[k]];
    const int count = 1 + static_cast<int>(rng() % 2);
    for (int j = 0; j < count; ++j) bs.push_back(all[rng() % all.size()]);
  }
  const std::size_t honest = perm.size() - f;
  const int demands = 1 + static_cast<int>(rng() % 3);
  for (int d = 0; d < demands; ++d) {
    const NodeId s = perm[f + rng() % honest];
    const NodeId t = perm[f + rng() % honest];
    if (s == t) continue;
    c.demands.push_back({static_cast<std::uint32_t>(d), s, t, 1 + rng() % 600'000});
  }
  c.name = "fuzz-" + std::to_string(c.seed % 100000);
  return c;
}

}  // namespace itsbft::oracle
