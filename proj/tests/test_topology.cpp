#include <random>

#include "doctest.h"
#include "itsbft/topology.hpp"
#include "oracles.hpp"

using namespace itsbft;

TEST_CASE("graph validation") {
  CHECK_THROWS_AS(Graph(3, {{0, 0}}), std::invalid_argument);
  CHECK_THROWS_AS(Graph(3, {{0, 1}, {1, 0}}), std::invalid_argument);
  CHECK_THROWS_AS(Graph(3, {{0, 5}}), std::invalid_argument);
  CHECK_THROWS_AS(node_connectivity(Graph()), std::invalid_argument);
  CHECK_THROWS_AS(node_connectivity(Graph(4, {{0, 1}, {2, 3}})), std::invalid_argument);
}

TEST_CASE("node connectivity") {
  CHECK(node_connectivity(Graph::complete(4)) == 3);
  CHECK(node_connectivity(Graph::path(3)) == 1);
  CHECK(oracle::connectivity(Graph::ring(5)) == 2);
  CHECK(node_connectivity(Graph::ring(5)) == 2);
}

TEST_CASE("disjoint paths") {
  SUBCASE("ring arcs") {
    const auto ps = max_disjoint_paths(Graph::ring(5), 0, 2);
    CHECK(ps.size() == 2);
    CHECK(ps.paths[0] == Path{0, 1, 2});
    CHECK(ps.paths[1] == Path{0, 4, 3, 2});
  }
  SUBCASE("complete graph") {
    const auto ps = max_disjoint_paths(Graph::complete(5), 1, 3);
    CHECK(ps.size() == 4);
    CHECK(ps.paths[0] == Path{1, 3});
    CHECK(is_valid_path_set(Graph::complete(5), ps));
  }
  SUBCASE("same endpoint rejected") { CHECK_THROWS_AS(max_disjoint_paths(Graph::ring(4), 2, 2), std::invalid_argument); }
  SUBCASE("random 7-node graphs match path-combination enumeration") {
    std::mt19937_64 rng(2024);
    for (int trial = 0; trial < 40; ++trial) {
      const Graph g = oracle::random_connected_graph(rng, 7, 0.45);
      for (NodeId s = 0; s < 7; ++s)
        for (NodeId t = s + 1; t < 7; ++t) {
          const auto ps = max_disjoint_paths(g, s, t);
          REQUIRE(is_valid_path_set(g, ps));
          REQUIRE(ps.size() == oracle::max_paths_by_enumeration(g, s, t));
        }
    }
  }
  SUBCASE("deterministic") {
    const Graph g = oracle::circulant(9, {1, 3});
    CHECK(max_disjoint_paths(g, 0, 4).paths == max_disjoint_paths(g, 0, 4).paths);
  }
}

TEST_CASE("byzantine capacity") {
  CHECK(byzantine_capacity(Graph::complete(4)) == 1);
  CHECK(byzantine_capacity(Graph::ring(5)) == 1);
  const Graph c4 = oracle::circulant(13, {1, 2});
  CHECK(oracle::connectivity(c4) == 4);
  CHECK(byzantine_capacity(c4) == 3);
}

TEST_CASE("capacity-sized removals never disconnect, a connectivity-sized one does") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 60; ++trial) {
    const Graph g = oracle::random_connected_graph(rng, 4 + rng() % 4, 0.6);
    const std::size_t n = g.node_count(), cap = byzantine_capacity(g), c = node_connectivity(g);
    bool some_cut = c == n - 1;
    for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
      const auto k = static_cast<std::size_t>(__builtin_popcount(mask));
      if (k == cap) REQUIRE(oracle::connected_without(g, mask));
      if (k == c && !oracle::connected_without(g, mask)) some_cut = true;
    }
    CHECK(some_cut);
  }
}
