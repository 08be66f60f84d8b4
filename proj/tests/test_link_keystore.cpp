#include <random>

#include "doctest.h"
#include "itsbft/link_keystore.hpp"

using namespace itsbft;

TEST_CASE("provision and consume") {
  Keystore ks;
  ks.provision({0, 1}, 10'000'000, 5);
  CHECK(ks.available({0, 1}) == 10'000'000);
  CHECK_THROWS_AS(ks.provision({1, 0}, 1, 1), std::invalid_argument);

  const auto block = ks.consume({0, 1}, 300'000, KeyPurpose::Delivery);
  CHECK(block.material.size() == 300'000);
  CHECK(ks.available({0, 1}) == 9'700'000);
  CHECK(ks.ledger().total_delivery() == 300'000);
  CHECK(ks.ledger().total_consensus() == 0);

  const auto empty = ks.consume({0, 1}, 0, KeyPurpose::Consensus);
  CHECK(empty.material.empty());
  CHECK(ks.available({0, 1}) == 9'700'000);
}

TEST_CASE("empty and exhausted pools signal insufficient key") {
  Keystore ks;
  ks.provision({2, 3}, 0, 1);
  CHECK_THROWS_AS(ks.consume({2, 3}, 1, KeyPurpose::Delivery), InsufficientKey);
  ks.provision({0, 1}, 1000, 1);
  try {
    ks.consume({0, 1}, 1001, KeyPurpose::Delivery);
    FAIL("expected InsufficientKey");
  } catch (const InsufficientKey& e) {
    CHECK(e.requested == 1001);
    CHECK(e.available == 1000);
  }
  CHECK(ks.available({0, 1}) == 1000);
}

TEST_CASE("both endpoints derive identical material") {
  KeyPool at_a({0, 1}, 4096, 77), at_b({1, 0}, 4096, 77);
  CHECK(at_a.read(0, 128) == at_b.read(0, 128));
  CHECK(at_a.take(128).material == at_b.read(0, 128));
}

TEST_CASE("blocks never overlap and the ledger conserves") {
  Keystore ks = Keystore::for_graph(Graph::ring(4), 50'000, 3);
  std::mt19937_64 rng(1);
  std::map<Edge, std::uint64_t> next_offset;
  for (int i = 0; i < 200; ++i) {
    const Edge e = ks.pools().begin()->first == Edge{0, 1} && (rng() & 1) ? Edge{0, 1} : Edge{1, 2};
    const auto len = rng() % 500;
    const auto purpose = (rng() & 1) ? KeyPurpose::Consensus : KeyPurpose::Delivery;
    const auto b = ks.consume(e, len, purpose);
    REQUIRE(b.offset_bits == next_offset[e]);
    next_offset[e] += len;
  }
  CHECK(ks.ledger().total() == ks.total_consumed());
}

TEST_CASE("tagged draws are idempotent") {
  Keystore ks = Keystore::for_graph(Graph::path(3), 1000, 9);
  const auto first = ks.consume_tagged("v0/p0/h0", {0, 1}, 100, KeyPurpose::Delivery);
  const auto again = ks.consume_tagged("v0/p0/h0", {0, 1}, 100, KeyPurpose::Delivery);
  CHECK(first.material == again.material);
  CHECK(ks.available({0, 1}) == 900);
}
