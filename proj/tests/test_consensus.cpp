#include <doctest.h>

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <set>
#include <tuple>
#include <vector>

#include "itsbft/consensus.hpp"

using namespace itsbft;

namespace {

// Lockstep harness: messages sent in slot t arrive at t + 1 unless the
// filter drops or rewrites them.
struct Cluster {
  using Filter = std::function<std::optional<ProtocolMessage>(const ProtocolMessage&, NodeId to, Tick now)>;

  struct Sent {
    Tick at;
    ProtocolMessage msg;
  };

  Graph g;
  Keystore keys;
  PublicBoard board;
  std::vector<std::unique_ptr<Node>> nodes;
  std::multimap<Tick, std::pair<NodeId, ProtocolMessage>> queue;
  std::vector<Sent> sent;
  Filter filter;
  Tick now = 0;

  Cluster(Graph graph, std::size_t f, std::vector<Demand> demands, std::uint64_t seed = 5)
      : g(std::move(graph)), keys(Keystore::for_graph(g, 10'000'000, seed)) {
    board.pending = std::move(demands);
    board.budget = keys.balances();
    for (NodeId i = 0; i < g.node_count(); ++i) {
      NodeConfig cfg;
      cfg.graph = &g;
      cfg.keys = &keys;
      cfg.board = &board;
      cfg.f = f;
      cfg.seed = seed;
      nodes.push_back(std::make_unique<Node>(i, cfg));
    }
  }
  Cluster(const Cluster&) = delete;
  Cluster& operator=(const Cluster&) = delete;

  Node& node(NodeId i) { return *nodes.at(i); }

  void broadcast(NodeId from, const std::vector<ProtocolMessage>& out) {
    for (const auto& m : out) {
      sent.push_back({now, m});
      for (NodeId r = 0; r < nodes.size(); ++r) {
        if (r == from) continue;
        auto copy = filter ? filter(m, r, now) : std::optional<ProtocolMessage>(m);
        if (copy) queue.emplace(now + 1, std::make_pair(r, std::move(*copy)));
      }
    }
  }

  void step() {
    const auto [lo, hi] = queue.equal_range(now);
    for (auto it = lo; it != hi; ++it) node(it->second.first).handle_message(it->second.second, now);
    queue.erase(lo, hi);
    for (NodeId i = 0; i < nodes.size(); ++i) broadcast(i, node(i).close_slot(now));
    for (NodeId i = 0; i < nodes.size(); ++i) broadcast(i, node(i).open_slot(now));
    ++now;
  }

  void run_through(Tick last) {
    while (now <= last) step();
  }

  std::vector<const Sent*> sent_by(NodeId s, std::optional<Step> step = std::nullopt) const {
    std::vector<const Sent*> out;
    for (const auto& x : sent)
      if (x.msg.source == s && (!step || x.msg.step == *step)) out.push_back(&x);
    return out;
  }
};

std::set<std::uint64_t> commit_digests(Node& n, std::uint64_t view) {
  std::set<std::uint64_t> out;
  for (const auto& c : n.commits())
    if (c.view == view) out.insert(c.digest);
  return out;
}

}  // namespace

TEST_CASE("honest view on K4 commits one value everywhere and completes in 7 slots") {
  Cluster c(Graph::complete(4), 1, {{1, 1, 3, 300'000}});
  c.run_through(6);
  const auto d0 = commit_digests(c.node(0), 0);
  REQUIRE(d0.size() == 1);
  for (NodeId i = 0; i < 4; ++i) {
    CHECK(commit_digests(c.node(i), 0) == d0);
    CHECK(c.node(i).state().view == 0);
  }
  // Every replica verified with all four supporters and the proposal carried three 100Kb paths.
  for (NodeId i = 1; i < 4; ++i) {
    const auto v = c.sent_by(i, Step::Verify);
    REQUIRE(v.size() == 1);
    CHECK(v[0]->at == 2);
    CHECK(v[0]->msg.payload.supporters.size() == 4);
  }
  const auto prop = c.sent_by(0, Step::Propose);
  REQUIRE(prop.size() == 1);
  REQUIRE(prop[0]->msg.payload.proposal->plans.size() == 1);
  CHECK(prop[0]->msg.payload.proposal->plans[0].amounts == std::vector<std::uint64_t>{100'000, 100'000, 100'000});
  CHECK(*d0.begin() == proposal_digest(*prop[0]->msg.payload.proposal));

  c.step();  // slot 7: completion and next view
  for (NodeId i = 0; i < 4; ++i) {
    CHECK(c.node(i).state().view == 1);
    CHECK(c.node(i).state().start == 7);
    CHECK(c.node(i).view_records().front().outcome == ViewOutcome::Committed);
  }
  std::set<NodeId> leaders;
  for (NodeId i = 0; i < 4; ++i) leaders.insert(c.node(i).state().leader);
  CHECK(leaders.size() == 1);
}

TEST_CASE("N = 4 still verifies with three votes when one replica is silent") {
  Cluster c(Graph::complete(4), 1, {{1, 1, 2, 300'000}});
  c.filter = [](const ProtocolMessage& m, NodeId, Tick) -> std::optional<ProtocolMessage> {
    if (m.source == 3) return std::nullopt;
    return m;
  };
  c.run_through(6);
  for (NodeId i = 1; i <= 2; ++i) {
    const auto v = c.sent_by(i, Step::Verify);
    REQUIRE(v.size() == 1);
    const auto& sup = v[0]->msg.payload.supporters;
    CHECK(std::set<NodeId>(sup.begin(), sup.end()) == std::set<NodeId>{0, 1, 2});
  }
  const auto d = commit_digests(c.node(0), 0);
  REQUIRE(d.size() == 1);
  CHECK(commit_digests(c.node(1), 0) == d);
  CHECK(commit_digests(c.node(2), 0) == d);
}

TEST_CASE("silent leader: timer fires at start + 8 and f + 1 ViewChanges move to the next view") {
  Cluster c(Graph::complete(4), 1, {{1, 1, 3, 300'000}});
  c.filter = [](const ProtocolMessage& m, NodeId, Tick) -> std::optional<ProtocolMessage> {
    if (m.source == 0) return std::nullopt;
    return m;
  };
  c.run_through(7);
  for (NodeId i = 1; i < 4; ++i) {
    CHECK(c.node(i).state().view == 0);
    CHECK(c.sent_by(i, Step::ViewChange).empty());
  }
  c.step();  // tick 8
  for (NodeId i = 1; i < 4; ++i) {
    const auto vc = c.sent_by(i, Step::ViewChange);
    REQUIRE(vc.size() == 1);
    CHECK(vc[0]->at == 8);
    CHECK(vc[0]->msg.ts.key_ref == KeyRef{0, key_index::kTimer});
  }
  c.step();  // tick 9: quorum seen
  for (NodeId i = 1; i < 4; ++i) {
    CHECK(c.node(i).state().view == 1);
    CHECK(c.node(i).state().leader == 1);
    CHECK(c.node(i).state().start == 9);
    CHECK(c.node(i).view_records().front().outcome == ViewOutcome::ViewChange);
  }
  CHECK(c.sent_by(1, Step::Propose).size() == 1);
}

TEST_CASE("f ViewChanges do not move a node; a relayed certificate does") {
  // K7 with f = 2: node 6 hears only node 1's timer ViewChange (plus its own).
  Cluster c(Graph::complete(7), 2, {{1, 1, 4, 200'000}});
  c.filter = [](const ProtocolMessage& m, NodeId to, Tick) -> std::optional<ProtocolMessage> {
    if (m.source == 0) return std::nullopt;
    if (to == 6 && m.step == Step::ViewChange && m.payload.supporters.empty() && m.source != 1) return std::nullopt;
    return m;
  };
  c.run_through(9);
  for (NodeId i = 1; i < 6; ++i) CHECK(c.node(i).state().view == 1);
  CHECK(c.node(6).state().view == 0);
  CHECK(c.node(6).state().viewchange_tally == 2);
  c.step();  // tick 10: certificates from the others arrive
  CHECK(c.node(6).state().view == 1);
  CHECK(c.node(6).state().start == 9);
  const auto relays = c.sent_by(1, Step::ViewChange);
  REQUIRE(relays.size() == 2);
  CHECK(relays[1]->msg.ts.key_ref == KeyRef{0, key_index::kRelay});
  CHECK(relays[1]->msg.payload.supporters.size() >= 3);
}

TEST_CASE("equivocating leader is caught: evidence at every replica, no commit, next view") {
  Cluster c(Graph::complete(7), 1, {{1, 1, 4, 300'000}});
  std::optional<ProtocolMessage> forged;
  c.filter = [&](const ProtocolMessage& m, NodeId to, Tick now) -> std::optional<ProtocolMessage> {
    if (m.step != Step::Propose || m.source != 0 || to < 4) return m;
    if (!forged) {
      ProtocolMessage alt = m;
      for (auto& a : alt.payload.proposal->plans.at(0).amounts) a -= 1;
      const TsKey* k1 = c.node(0).key(0, key_index::kFirst);
      REQUIRE(k1 != nullptr);
      alt.ts = ts_sign(*k1, signing_bytes(alt), now, SecurityParams{});
      forged = alt;
    }
    return forged;
  };
  c.run_through(4);
  REQUIRE(forged.has_value());
  for (NodeId i = 1; i < 7; ++i) {
    CHECK(commit_digests(c.node(i), 0).empty());
    REQUIRE(c.node(i).evidence().size() == 1);
    const auto& ev = c.node(i).evidence().front();
    CHECK(proposal_digest(ev.first) != proposal_digest(ev.second));
    CHECK(ev.first_ts.key_ref == ev.second_ts.key_ref);
    CHECK(c.node(i).state().view == 1);
  }
  // The ViewChange that carried the evidence went out at T + 3.
  const auto vc = c.sent_by(1, Step::ViewChange);
  REQUIRE(!vc.empty());
  CHECK(vc[0]->at == 3);
  CHECK(vc[0]->msg.payload.evidence.has_value());
}

TEST_CASE("forged Vote under an honest identity is rejected once the real key is disclosed") {
  Cluster c(Graph::complete(4), 1, {{1, 1, 3, 300'000}});
  std::mt19937_64 rng(11);
  c.filter = [&](const ProtocolMessage& m, NodeId to, Tick) -> std::optional<ProtocolMessage> {
    if (m.step == Step::Vote && m.source == 2 && to == 3) {
      ProtocolMessage fake = m;
      for (std::size_t b = 0; b < fake.ts.tag.size(); ++b) fake.ts.tag.set(b, rng() & 1);
      if (fake.ts.tag == m.ts.tag) fake.ts.tag.flip(0);
      return fake;
    }
    return m;
  };
  c.run_through(6);
  const auto& rej = c.node(3).stats().ts_rejections;
  REQUIRE(rej.count(TsReject::BadTag) == 1);
  CHECK(rej.at(TsReject::BadTag) == 1);
  // Three genuine supporters remain, so the view still commits.
  const auto d = commit_digests(c.node(0), 0);
  REQUIRE(d.size() == 1);
  CHECK(commit_digests(c.node(3), 0) == d);
}

TEST_CASE("late messages are dropped as untrusted") {
  Cluster source(Graph::complete(4), 1, {{1, 1, 3, 300'000}});
  source.run_through(0);
  const auto prop = source.sent_by(0, Step::Propose);
  REQUIRE(prop.size() == 1);

  Cluster on_time(Graph::complete(4), 1, {{1, 1, 3, 300'000}});
  on_time.node(1).handle_message(prop[0]->msg, 1);
  CHECK(on_time.node(1).stats().dropped_late == 0);

  Cluster late(Graph::complete(4), 1, {{1, 1, 3, 300'000}});
  late.node(1).handle_message(prop[0]->msg, 2);
  CHECK(late.node(1).stats().dropped_late == 1);
  // Nothing to vote on: the node never validated a proposal.
  late.now = 1;
  CHECK(late.node(1).close_slot(1).empty());
}

TEST_CASE("key hygiene: one message per key, disclosed exactly once and only afterwards") {
  Cluster c(Graph::complete(4), 1, {{1, 1, 3, 300'000}});
  c.run_through(14);  // two full views
  const SecurityParams params;
  for (NodeId s = 0; s < 4; ++s) {
    const auto msgs = c.sent_by(s);
    REQUIRE(msgs.size() >= 10);
    std::map<KeyRef, const Cluster::Sent*> used;
    for (const auto* m : msgs) {
      CHECK(m->msg.ts.signer == s);
      CHECK(used.emplace(m->msg.ts.key_ref, m).second);
    }
    std::map<KeyRef, int> disclosures;
    for (const auto* m : msgs)
      for (const auto& k : m->msg.disclosed) {
        CHECK(k.owner == s);
        CHECK(k.disclosed);
        ++disclosures[k.ref()];
        REQUIRE(used.count(k.ref()) == 1);
        const auto* signed_with = used.at(k.ref());
        CHECK(signed_with->at <= m->at);
        CHECK(signed_with != m);
        CHECK(k.ref() != m->msg.ts.key_ref);
        // The disclosed material reproduces the earlier tag.
        CHECK(ts_verify(signed_with->msg.ts, signing_bytes(signed_with->msg), k, c.g, (s + 1) % 4, 1,
                        signed_with->at + 1, 1, params)
                  .accepted());
      }
    for (const auto& [ref, count] : disclosures) CHECK(count == 1);
    // Every key except the most recent one has been disclosed.
    CHECK(disclosures.size() == used.size() - 1);
  }
}
