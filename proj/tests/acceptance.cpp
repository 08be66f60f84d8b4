// Acceptance run: one PASS/FAIL line per criterion, non-zero exit if any fail.

#include <boost/math/distributions/chi_squared.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>

#include "itsbft/its_crypto.hpp"
#include "itsbft/key_distribution.hpp"
#include "itsbft/proposal.hpp"
#include "itsbft/scenario.hpp"
#include "itsbft/simnet.hpp"
#include "oracles.hpp"
#include "scenario_gen.hpp"

using namespace itsbft;

namespace {

struct Verdict {
  bool pass = true;
  std::ostringstream detail;

  void fail(const std::string& why) {
    if (pass) detail.str("");
    if (!pass) detail << "; ";
    pass = false;
    detail << why;
  }
};

std::string fixed2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

// ---------------------------------------------------------------- scenarios

struct Expected {
  const char* file;
  bool infeasible;
  const char* percent;
  double seconds;
};

// Stall scenarios put a Byzantine node in the first leader's seat.
constexpr Expected kTable[] = {
    {"c2-f1", false, "50.00", 14}, {"c2-f2", true, "100.00", 0},  {"c2-f3", true, "100.00", 0},
    {"c3-f1", false, "33.33", 7},  {"c3-f2", false, "66.67", 14}, {"c3-f3", true, "100.00", 0},
    {"c4-f1", false, "25.00", 7},  {"c4-f2", false, "50.00", 7},  {"c4-f3", false, "75.00", 14},
};

struct ShippedRun {
  ScenarioConfig cfg;
  MetricsReport report;
};

const std::map<std::string, ShippedRun>& shipped() {
  static const auto runs = [] {
    std::map<std::string, ShippedRun> out;
    for (const auto& e : kTable) {
      auto cfg = load_scenario_file(std::filesystem::path(ITSBFT_SCENARIO_DIR) / (std::string(e.file) + ".yaml"));
      auto report = run_scenario(cfg);
      out.emplace(e.file, ShippedRun{std::move(cfg), std::move(report)});
    }
    return out;
  }();
  return runs;
}

void eavesdrop_ratio(Verdict& v) {
  for (const auto& e : kTable) {
    const auto& r = shipped().at(e.file).report;
    const auto got = fixed2(r.eavesdrop_worst_percent);
    if (r.infeasible != e.infeasible || got != e.percent)
      v.fail(std::string(e.file) + ": " + got + "%" + (r.infeasible ? " infeasible" : "") + ", expected " +
             e.percent + "%");
    else
      v.detail << e.file << "=" << got << (r.infeasible ? "(infeasible) " : " ");
  }
}

void timing(Verdict& v) {
  for (const auto& e : kTable) {
    if (e.infeasible) continue;
    const auto& [cfg, r] = shipped().at(e.file);
    const bool first_leader_byzantine = cfg.adversary.is_byzantine(0);
    if (r.time_s != e.seconds || first_leader_byzantine != (e.seconds == 14))
      v.fail(std::string(e.file) + ": " + std::to_string(r.time_s) + " s");
    else
      v.detail << e.file << "=" << r.time_s << "s ";
  }
}

void consensus_overhead(Verdict& v) {
  const auto& r = shipped().at("c4-f3").report;
  const double ratio = 100.0 * static_cast<double>(r.consensus_bits) / static_cast<double>(r.delivery_bits);
  v.detail << "c4-f3 consensus " << r.consensus_bits << " / delivery " << r.delivery_bits << " = " << ratio
           << "% (bound 1.1%)";
  if (!(ratio <= 1.1)) v.fail("ratio " + std::to_string(ratio) + "% above 1.1%");
}

// Recomputes both ledgers per link from first principles: delivery from the
// disjoint path sets (checked against the brute-force oracle) and ceil(a/beta)
// per path, consensus from each node's TS-key draw count and degree.
void closed_forms(Verdict& v) {
  std::size_t links = 0;
  for (const auto& e : kTable) {
    if (e.infeasible) continue;
    const auto& cfg = shipped().at(e.file).cfg;
    const auto& g = cfg.graph;
    World w(cfg);
    while (!w.done()) w.advance_slot();
    const auto& led = w.keystore().ledger();

    std::map<Edge, std::uint64_t> delivery;
    for (const auto& d : cfg.demands) {
      const auto ps = max_disjoint_paths(g, d.src, d.dst);
      if (!is_valid_path_set(g, ps) || ps.size() != oracle::local_connectivity(g, d.src, d.dst))
        v.fail(std::string(e.file) + ": path set for demand " + std::to_string(d.id) + " not maximal");
      const std::uint64_t per_path = (d.amount_bits + ps.size() - 1) / ps.size();
      for (const auto& p : ps.paths)
        for (std::size_t h = 0; h + 1 < p.size(); ++h) delivery[Edge(p[h], p[h + 1])] += per_path;
    }
    std::map<Edge, std::uint64_t> consensus;
    const std::size_t f = cfg.fault_bound();
    for (NodeId i = 0; i < g.node_count(); ++i) {
      const std::size_t deg = g.neighbors(i).size();
      const std::size_t honest_shares = deg - std::min(f, deg - 1);
      const std::uint64_t share = (cfg.params.ts_key_len_bits + honest_shares - 1) / honest_shares;
      for (NodeId nb : g.neighbors(i)) consensus[Edge(i, nb)] += w.nodes()[i].stats().keys_drawn * share;
    }
    const auto strip = [](std::map<Edge, std::uint64_t> m) {
      std::erase_if(m, [](const auto& kv) { return kv.second == 0; });
      return m;
    };
    if (strip(led.delivery_bits) != strip(delivery)) v.fail(std::string(e.file) + ": delivery ledger differs");
    if (strip(led.consensus_bits) != strip(consensus)) v.fail(std::string(e.file) + ": consensus ledger differs");
    const auto r = w.report();
    if (r.delivery_bits != r.delivery_closed_form_bits || r.consensus_bits != r.consensus_closed_form_bits)
      v.fail(std::string(e.file) + ": report closed forms differ from ledger");
    links += g.edges().size();
  }
  v.detail << "6 feasible scenarios, " << links << " links matched exactly";
}

// ---------------------------------------------------------------- fuzzing

struct FuzzTotals {
  std::size_t runs = 0, with_byzantine = 0, commits = 0, views = 0;
  std::vector<std::string> safety, liveness;
};

const FuzzTotals& fuzz() {
  static const auto totals = [] {
    FuzzTotals t;
    std::mt19937_64 rng(20240607);
    std::vector<ScenarioConfig> configs;
    for (const auto& [name, run] : shipped())
      if (!run.report.infeasible) configs.push_back(run.cfg);
    for (int i = 0; i < 1000; ++i) configs.push_back(oracle::random_scenario(rng));

    for (const auto& cfg : configs) {
      const std::string who = cfg.name + " (seed " + std::to_string(cfg.seed) + ")";
      World w(cfg);
      const Tick bound = 16 * (cfg.view_limit + 2);
      while (!w.done() && w.now() <= bound) w.advance_slot();
      ++t.runs;
      t.with_byzantine += !cfg.adversary.byzantine_set.empty();
      if (!w.done()) t.liveness.push_back(who + ": still running at tick " + std::to_string(w.now()));

      for (const auto& [view, digests] : w.ledger().honest_commits()) {
        ++t.commits;
        if (digests.size() > 1) t.safety.push_back(who + ": view " + std::to_string(view) + " has two commits");
      }
      for (const auto& s : w.ledger().safety_violations()) t.safety.push_back(who + ": " + s);
      for (const auto& s : w.ledger().liveness_violations()) t.liveness.push_back(who + ": " + s);

      // Every view an honest node left was resolved by start + 8 slots.
      for (NodeId i = 0; i < w.nodes().size(); ++i) {
        if (cfg.adversary.is_byzantine(i)) continue;
        for (const auto& rec : w.nodes()[i].view_records()) {
          if (!rec.left_at) continue;
          ++t.views;
          if (!rec.resolved_at || *rec.resolved_at > rec.start + 8)
            t.liveness.push_back(who + ": node " + std::to_string(i) + " view " + std::to_string(rec.view) +
                                 " unresolved by start + 8");
        }
      }
    }
    return t;
  }();
  return totals;
}

void safety(Verdict& v) {
  const auto& t = fuzz();
  v.detail << t.runs << " runs (" << t.with_byzantine << " with Byzantine nodes), " << t.commits
           << " committed views, " << t.safety.size() << " violations";
  if (t.runs < 1000) v.fail("fewer than 1000 runs");
  if (!t.safety.empty()) v.fail(t.safety.front());
}

void liveness(Verdict& v) {
  const auto& t = fuzz();
  v.detail << t.views << " honest node-views across " << t.runs << " runs, " << t.liveness.size() << " stalls";
  if (!t.liveness.empty()) v.fail(t.liveness.front());
}

// ---------------------------------------------------------------- key relay

std::vector<KeyBlock> random_links(std::mt19937_64& rng, const Path& path, std::size_t bits) {
  std::vector<KeyBlock> links;
  for (std::size_t i = 0; i + 1 < path.size(); ++i)
    links.push_back({Edge(path[i], path[i + 1]), 0, bits, oracle::random_bits(rng, bits)});
  return links;
}

PathOutcome honest_outcome(std::mt19937_64& rng, std::uint32_t id, const Path& path, std::size_t bits) {
  const auto links = random_links(rng, path, bits);
  const auto agg = kc_transmit(path, honest_closures(path, id, links));
  return {id, path, links.front().material, recover_at_destination(agg, links.back().material), 2, false};
}

void telescoping(Verdict& v) {
  std::mt19937_64 rng(7);
  const SecurityParams params;
  std::size_t tampered = 0;
  for (int i = 0; i < 1000; ++i) {
    const std::size_t hops = 1 + rng() % 8, bits = 64 + rng() % 193;
    Path p{0};
    for (std::size_t k = 1; k < hops; ++k) p.push_back(static_cast<NodeId>(10 + k));
    p.push_back(1);
    const auto links = random_links(rng, p, bits);
    auto closures = honest_closures(p, 0, links);
    if (recover_at_destination(kc_transmit(p, closures), links.back().material) != links.front().material) {
      v.fail("telescoping failed on a " + std::to_string(hops) + "-hop path");
      continue;
    }
    if (closures.empty()) continue;

    // Two honest side paths keep f = 1 feasible after exposing the tampered one.
    closures[rng() % closures.size()].material.flip(rng() % bits);
    std::vector<PathOutcome> os{
        {0, p, links.front().material,
         recover_at_destination(kc_transmit(p, closures), links.back().material), 2, false},
        honest_outcome(rng, 1, {0, 2, 1}, bits), honest_outcome(rng, 2, {0, 3, 1}, bits)};
    const Demand d{0, 0, 1, 3 * bits};
    const auto first = finalize_demand(d, os, 1, {}, 5, params);
    if (!std::holds_alternative<RecoveryPlan>(first) || std::get<RecoveryPlan>(first).paths != std::vector<std::uint32_t>{0}) {
      v.fail("tampered closure did not yield a recovery plan for the path");
      continue;
    }
    const Path back(p.rbegin(), p.rend());
    const auto fwd = random_links(rng, p, bits), bwd = random_links(rng, back, bits);
    const auto repair = bidirectional_repair(p, fwd, honest_closures(p, 0, fwd), bwd, honest_closures(back, 0, bwd));
    os[0].src_segment = repair.src_segment;
    os[0].dst_segment = repair.dst_segment;
    const auto second = finalize_demand(d, os, 1, {0}, 5, params);
    const auto* key = std::get_if<EndToEndKey>(&second);
    if (!repair.agreed() || !key || !key->yields_key() || key->final_bits != key->dst_final_bits)
      v.fail("post-repair endpoint keys differ");
    ++tampered;
  }
  v.detail << "1000 paths of 1-8 hops, " << tampered << " tampered and repaired";
}

// ---------------------------------------------------------------- graphs

void check_graph(Verdict& v, const Graph& g, bool enumerate, std::size_t& pairs) {
  if (node_connectivity(g) != oracle::connectivity(g)) v.fail("node_connectivity mismatch");
  for (NodeId s = 0; s < g.node_count(); ++s)
    for (NodeId t = s + 1; t < g.node_count(); ++t) {
      const auto ps = max_disjoint_paths(g, s, t);
      const auto want = oracle::local_connectivity(g, s, t);
      if (!is_valid_path_set(g, ps) || ps.size() != want ||
          (enumerate && want != oracle::max_paths_by_enumeration(g, s, t)))
        v.fail("disjoint paths mismatch on " + std::to_string(g.node_count()) + " nodes");
      ++pairs;
    }
}

void graph_oracles(Verdict& v) {
  std::size_t exhaustive = 0, sampled = 0, pairs = 0;
  for (std::size_t n = 2; n <= 5; ++n) {
    std::vector<Edge> all;
    for (NodeId i = 0; i < n; ++i)
      for (NodeId j = i + 1; j < n; ++j) all.emplace_back(i, j);
    for (std::uint32_t mask = 0; mask < (1u << all.size()); ++mask) {
      std::vector<Edge> es;
      for (std::size_t k = 0; k < all.size(); ++k)
        if (mask >> k & 1) es.push_back(all[k]);
      const Graph g(n, es);
      if (!g.is_connected()) continue;
      check_graph(v, g, true, pairs);
      ++exhaustive;
    }
  }
  std::mt19937_64 rng(11);
  for (; sampled < 10'000; ++sampled) {
    const std::size_t n = 6 + rng() % 2;
    check_graph(v, oracle::random_connected_graph(rng, n, 0.2 + 0.7 * static_cast<double>(rng() % 100) / 100.0),
                false, pairs);
  }
  v.detail << exhaustive << " connected graphs on 2-5 nodes (all), " << sampled << " random on 6-7 nodes, " << pairs
            << " node pairs";
}

// ---------------------------------------------------------------- leader election

void leader_fairness(Verdict& v) {
  std::mt19937_64 rng(99);
  std::map<NodeId, BitString> keys;
  const int views = 10'000;
  std::vector<int> hist(8, 0);
  for (int view = 1; view <= views; ++view) {
    for (NodeId i = 0; i < 8; ++i) keys[i] = oracle::random_bits(rng, 126);
    ++hist[elect_leader(view, keys, 8)];
  }
  double chi2 = 0;
  for (int c : hist) chi2 += (c - views / 8.0) * (c - views / 8.0) / (views / 8.0);
  const double p = boost::math::cdf(boost::math::complement(boost::math::chi_squared(7), chi2));
  v.detail << "N = 8, " << views << " views, chi2 = " << chi2 << ", p = " << p;
  if (p < 0.001) v.fail("p below 0.001");
}

// ---------------------------------------------------------------- forgery

void forgery(Verdict& v) {
  SecurityParams toy;
  toy.omega = 16;
  toy.epsilon_k = 0.01;
  toy.ts_key_len_bits = 32;
  std::mt19937_64 rng(77);
  const std::vector<std::uint8_t> msg{'v', 'o', 't', 'e'};
  const double trials = 100'000;
  const double bound = trials * std::ldexp(1.0, -16) + 3 * std::sqrt(trials * std::ldexp(1.0, -16));

  // Random tags against a disclosed honest key.
  const Graph k4 = Graph::complete(4);
  int random_tags = 0;
  for (int i = 0; i < trials; ++i) {
    TsKey key{0, 1, 1, oracle::random_bits(rng, toy.ts_key_len_bits), false};
    key.disclose();
    const auto sig = forge_signature(rng, 0, key.ref(), 3, toy);
    random_tags += ts_verify(sig, msg, key, k4, 2, 1, 4, 1, toy).accepted();
  }
  // Key guessing with f = 1 of x = 3 shares known.
  const std::vector<Edge> star{{0, 1}, {0, 2}, {0, 3}};
  const std::size_t share = ts_share_bits(3, 1, toy.ts_key_len_bits);
  int guessed = 0;
  for (int i = 0; i < trials; ++i) {
    std::vector<KeyBlock> real, guess;
    for (const auto& e : star) {
      const auto bits = oracle::random_bits(rng, share);
      real.push_back({e, 0, share, bits});
      guess.push_back({e, 0, share, e == star[0] ? bits : oracle::random_bits(rng, share)});
    }
    guessed += auth_tag(ts_keygen(0, 0, 1, guess, 1, toy, 42).material, msg, toy).tag ==
               auth_tag(ts_keygen(0, 0, 1, real, 1, toy, 42).material, msg, toy).tag;
  }
  v.detail << "random tags " << random_tags << ", share guessing " << guessed << " of " << trials
           << " each (3 sigma bound " << fixed2(bound) << ")";
  if (random_tags > bound || guessed > bound) v.fail("forgery rate above bound");

  // Path condition: a valid tag is rejected exactly when the disclosure
  // graph holds fewer than f + 1 disjoint signer-verifier paths.
  std::size_t cases = 0, rejected = 0;
  for (int i = 0; i < 3000; ++i) {
    const std::size_t n = 3 + rng() % 5;
    const Graph full = oracle::random_connected_graph(rng, n, 0.3 + 0.6 * static_cast<double>(rng() % 100) / 100.0);
    const NodeId s = rng() % n;
    NodeId t = rng() % n;
    if (t == s) t = (s + 1) % n;
    std::vector<bool> keep(n, true);
    for (NodeId x = 0; x < n; ++x)
      if (x != s && x != t && rng() % 4 == 0) keep[x] = false;
    const Graph g = full.induced(keep);
    const std::size_t f = rng() % 4;
    TsKey key{s, 2, 3, oracle::random_bits(rng, toy.ts_key_len_bits), false};
    const auto sig = ts_sign(key, msg, 0, toy);
    key.disclose();
    const auto verdict = ts_verify(sig, msg, key, g, t, f, 1, 1, toy);
    const bool enough = oracle::local_connectivity(g, s, t) >= f + 1;
    if (verdict.accepted() != enough || (!enough && verdict.reason != TsReject::InsufficientPaths))
      v.fail("path condition wrong");
    rejected += !enough;
    ++cases;
  }
  v.detail << "; path condition exact on " << cases << " cases (" << rejected << " rejected)";
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<void(Verdict&)>>> criteria{
      {"eavesdrop ratio", eavesdrop_ratio},
      {"view timing", timing},
      {"consensus overhead", consensus_overhead},
      {"consumption closed forms", closed_forms},
      {"safety fuzzing", safety},
      {"liveness", liveness},
      {"XOR telescoping and repair", telescoping},
      {"graph oracle equivalence", graph_oracles},
      {"leader fairness", leader_fairness},
      {"TS forgery resistance", forgery},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Verdict v;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      criteria[i].second(v);
    } catch (const std::exception& e) {
      v.fail(std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failed += !v.pass;
    std::cout << (v.pass ? "PASS" : "FAIL") << "  " << (i + 1) << ". " << criteria[i].first << ": "
              << v.detail.str() << " [" << fixed2(secs) << " s]" << std::endl;
  }
  std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed" << std::endl;
  return failed == 0 ? 0 : 1;
}
