#include "itsbft/simnet.hpp"

#include <algorithm>
#include <deque>
#include <stdexcept>

namespace itsbft {

namespace {

constexpr std::uint32_t kSyntheticIdBase = 0x80000000u;
constexpr std::uint32_t kForgedIdBase = 0xF0000000u;
constexpr std::uint64_t kBudgetReserveKeys = 32;  // TS draws kept back from delivery budgets

struct BehaviorName {
  Behavior b;
  std::string_view name;
};
constexpr BehaviorName kNames[] = {
    {Behavior::EquivocatePropose, "equivocate-propose"},
    {Behavior::Withhold, "withhold"},
    {Behavior::DelayBeyondDelta, "delay-beyond-delta"},
    {Behavior::EavesdropRelayedKeys, "eavesdrop-relayed-keys"},
    {Behavior::ResourceContention, "resource-contention"},
    {Behavior::ForgedRequirement, "forged-requirement"},
    {Behavior::ForgedRoute, "forged-route"},
    {Behavior::TamperKc, "tamper-kc"},
    {Behavior::ForgeTsAttempt, "forge-ts-attempt"},
    {Behavior::StallAfterPropose, "stall-after-propose"},
};

NodeId farthest_from(const Graph& g, NodeId s) {
  std::vector<int> dist(g.node_count(), -1);
  std::deque<NodeId> q{s};
  dist[s] = 0;
  NodeId last = s;
  while (!q.empty()) {
    const NodeId u = q.front();
    q.pop_front();
    last = u;
    for (NodeId v : g.neighbors(u))
      if (dist[v] < 0) {
        dist[v] = dist[u] + 1;
        q.push_back(v);
      }
  }
  return last;
}

std::uint64_t plan_bits(const Proposal& p) {
  std::uint64_t bits = 0;
  for (const auto& plan : p.plans)
    for (std::size_t j = 0; j < plan.paths.size(); ++j) bits += plan.amounts[j] * (plan.paths[j].size() - 1);
  return bits;
}

}  // namespace

std::string_view to_string(Behavior b) noexcept {
  for (const auto& n : kNames)
    if (n.b == b) return n.name;
  return "?";
}

std::optional<Behavior> behavior_from_string(std::string_view s) noexcept {
  for (const auto& n : kNames)
    if (n.name == s) return n.b;
  return std::nullopt;
}

const std::vector<Behavior>& all_behaviors() {
  static const std::vector<Behavior> all = [] {
    std::vector<Behavior> v;
    for (const auto& n : kNames) v.push_back(n.b);
    return v;
  }();
  return all;
}

bool AdversaryScript::has(NodeId n, Behavior b) const {
  const auto it = behaviors.find(n);
  return it != behaviors.end() && std::find(it->second.begin(), it->second.end(), b) != it->second.end();
}

void ScenarioConfig::validate() const {
  const auto fail = [](const std::string& m) { throw std::invalid_argument(m); };
  if (graph.node_count() < 2) fail("topology: need at least two nodes");
  if (!graph.is_connected()) fail("topology: graph is not connected");
  if (capacity_bits == 0) fail("capacity_bits must be positive");
  if (!(delta_seconds > 0)) fail("delta_seconds must be positive");
  if (cap_bits == 0) fail("cap_bits must be positive");
  if (view_limit == 0) fail("view_limit must be positive");
  params.validate();
  std::set<std::uint32_t> ids;
  for (const auto& d : demands) {
    if (!graph.contains(d.src) || !graph.contains(d.dst))
      fail("demand " + std::to_string(d.id) + ": node id outside topology");
    if (d.src == d.dst) fail("demand " + std::to_string(d.id) + ": src equals dst");
    if (d.amount_bits == 0) fail("demand " + std::to_string(d.id) + ": amount must be positive");
    if (d.id >= kSyntheticIdBase) fail("demand " + std::to_string(d.id) + ": id reserved");
    if (!ids.insert(d.id).second) fail("demand " + std::to_string(d.id) + ": duplicate id");
  }
  for (NodeId b : adversary.byzantine_set)
    if (!graph.contains(b)) fail("byzantine node " + std::to_string(b) + " outside topology");
  for (const auto& [node, list] : adversary.behaviors)
    if (!adversary.is_byzantine(node)) fail("behaviors given for honest node " + std::to_string(node));
}

TemporarySignature forge_signature(std::mt19937_64& rng, NodeId claimed_signer, KeyRef ref, Tick at,
                                   const SecurityParams& params) {
  BitString tag(params.tag_bits());
  for (std::size_t i = 0; i < tag.size(); ++i)
    if (rng() & 1) tag.set(i, true);
  return {tag, claimed_signer, at, ref};
}

std::vector<Event> adversary_act(const AdversaryScript& script, const Node& node, Tick slot,
                                 std::vector<ProtocolMessage> outbound, AdversaryState& state, const Graph& g,
                                 const SecurityParams& params, Tick validity) {
  const NodeId me = node.id();
  const std::size_t n = g.node_count();
  std::vector<Event> events;
  if (script.has(me, Behavior::Withhold)) return events;
  const Tick at = slot + (script.has(me, Behavior::DelayBeyondDelta) ? validity + 1 : 1);
  const auto broadcast = [&](const ProtocolMessage& m, auto&& to) {
    for (NodeId r = 0; r < n; ++r)
      if (r != me && to(r)) events.push_back({at, r, m});
  };
  const auto everyone = [](NodeId) { return true; };
  const auto resign = [&](ProtocolMessage& m, unsigned index) {
    const TsKey* held = node.key(m.view, index);
    if (!held) return;
    TsKey k = *held;
    k.disclosed = false;
    m.ts = ts_sign(k, signing_bytes(m), m.ts.signed_at, params);
  };

  for (auto& m : outbound) {
    if (script.has(me, Behavior::StallAfterPropose)) {
      if (m.step == Step::Propose)
        state.stalled_views.insert({me, m.view});
      else if (state.stalled_views.count({me, m.view}))
        continue;
    }
    if (m.step == Step::Propose && m.payload.proposal) {
      auto& p = *m.payload.proposal;
      if (script.has(me, Behavior::ForgedRequirement)) {
        NodeId s = 0, t = 0;
        std::vector<NodeId> honest;
        for (NodeId v = 0; v < n; ++v)
          if (!script.is_byzantine(v)) honest.push_back(v);
        if (honest.size() >= 2) {
          s = honest.front();
          t = honest.back();
          auto ps = max_disjoint_paths(g, s, t);
          const std::uint64_t amount = 1000;
          p.plans.push_back({{kForgedIdBase + me, s, t, amount * ps.size()},
                             ps.paths,
                             std::vector<std::uint64_t>(ps.size(), amount)});
        }
        resign(m, key_index::kFirst);
      }
      if (script.has(me, Behavior::ForgedRoute) && !p.plans.empty() && !p.plans[0].paths.empty()) {
        auto& path = p.plans[0].paths[0];
        std::reverse(path.begin(), path.end());
        resign(m, key_index::kFirst);
      }
      if (script.has(me, Behavior::EquivocatePropose) && !p.plans.empty()) {
        ProtocolMessage alt = m;
        for (auto& a : alt.payload.proposal->plans[0].amounts) a = a > 1 ? a - 1 : a + 1;
        resign(alt, key_index::kFirst);
        broadcast(m, [&](NodeId r) { return r < n / 2; });
        broadcast(alt, [&](NodeId r) { return r >= n / 2; });
        continue;
      }
    }
    if (m.step == Step::Commit && script.has(me, Behavior::TamperKc) && !m.payload.closures.empty() &&
        !state.tampered.count(me)) {
      for (auto& c : m.payload.closures) c.material.flip(0);
      resign(m, key_index::kCommit);
      state.tampered.insert(me);
    }
    broadcast(m, everyone);
    if (m.step == Step::Vote && script.has(me, Behavior::ForgeTsAttempt)) {
      std::vector<NodeId> victims;
      for (NodeId v = 0; v < n; ++v)
        if (!script.is_byzantine(v)) victims.push_back(v);
      if (!victims.empty()) {
        const NodeId h = victims[state.rng() % victims.size()];
        ProtocolMessage fake = m;
        fake.source = h;
        fake.disclosed.clear();
        fake.ts = forge_signature(state.rng, h, {m.view, key_index::kFirst}, m.ts.signed_at, params);
        broadcast(fake, [&](NodeId r) { return r != h; });
        ++state.forged_sent;
      }
    }
  }
  return events;
}

// --- world --------------------------------------------------------------------

World::World(ScenarioConfig cfg, bool keep_trace) : cfg_(std::move(cfg)), keep_trace_(keep_trace) {
  cfg_.validate();
  f_ = cfg_.fault_bound();
  keys_ = Keystore::for_graph(cfg_.graph, cfg_.capacity_bits, derive_seed(cfg_.seed, {0x6b657973}));
  adv_.rng.seed(derive_seed(cfg_.seed, {0x616476}));
  for (NodeId b : cfg_.adversary.byzantine_set)
    if (cfg_.adversary.has(b, Behavior::ResourceContention)) {
      DemandOutcome o;
      o.demand = {kSyntheticIdBase + b, b, farthest_from(cfg_.graph, b), cfg_.contention_bits};
      o.synthetic = true;
      outcomes_.emplace(o.demand.id, o);
    }
  for (const auto& d : cfg_.demands) outcomes_.emplace(d.id, DemandOutcome{.demand = d});
  NodeConfig nc{&cfg_.graph, &keys_, &board_, cfg_.params, f_, cfg_.cap_bits, derive_seed(cfg_.seed, {0x7473}), 1};
  nodes_.reserve(cfg_.graph.node_count());
  for (NodeId i = 0; i < cfg_.graph.node_count(); ++i) nodes_.emplace_back(i, nc);
  refresh_board();
  done_ = std::none_of(outcomes_.begin(), outcomes_.end(), [](const auto& kv) { return !kv.second.synthetic; });
}

void World::refresh_board() {
  board_.pending.clear();
  // Synthetic contention demands carry the highest ids, so list them first.
  for (auto it = outcomes_.rbegin(); it != outcomes_.rend() && it->second.synthetic; ++it)
    if (!it->second.served) {
      auto d = it->second.demand;
      d.amount_bits -= it->second.delivered_pre_pa_bits;
      board_.pending.push_back(d);
    }
  for (const auto& [id, o] : outcomes_)
    if (!o.synthetic && !o.served) {
      auto d = o.demand;
      d.amount_bits -= o.delivered_pre_pa_bits;
      board_.pending.push_back(d);
    }
  board_.budget.clear();
  const auto share = [&](NodeId v) {
    return ts_share_bits(cfg_.graph.neighbors(v).size(), f_, cfg_.params.ts_key_len_bits);
  };
  for (const auto& [e, avail] : keys_.balances()) {
    const std::uint64_t reserve = kBudgetReserveKeys * (share(e.a) + share(e.b));
    board_.budget[e] = avail > reserve ? avail - reserve : 0;
  }
}

void World::route(NodeId sender, std::vector<ProtocolMessage> out) {
  if (out.empty()) return;
  for (const auto& m : out)
    if (m.payload.proposal) seen_proposals_.emplace(proposal_digest(*m.payload.proposal), *m.payload.proposal);
  std::vector<Event> events;
  if (cfg_.adversary.is_byzantine(sender)) {
    events = adversary_act(cfg_.adversary, nodes_[sender], now_, std::move(out), adv_, cfg_.graph, cfg_.params, 1);
  } else {
    for (const auto& m : out)
      for (NodeId r = 0; r < nodes_.size(); ++r)
        if (r != sender) events.push_back({now_ + 1, r, m});
  }
  for (auto& e : events) {
    if (keep_trace_)
      trace_.push_back("t=" + std::to_string(now_) + " send " + std::string(to_string(e.message.step)) + " view=" +
                       std::to_string(e.message.view) + " from=" + std::to_string(e.message.source) +
                       " to=" + std::to_string(e.recipient) + " deliver_at=" + std::to_string(e.deliver_at));
    queue_.emplace(e.deliver_at, std::move(e));
  }
}

void World::finalize_deliveries() {
  struct Pair {
    std::optional<DeliveryReport> src, dst;
  };
  std::map<std::pair<std::uint64_t, std::uint32_t>, Pair> reports;
  for (auto& node : nodes_)
    for (auto& rep : node.take_deliveries()) {
      auto& slot = reports[{rep.view, rep.demand.id}];
      (rep.is_source ? slot.src : slot.dst) = std::move(rep);
    }
  for (auto& [key, pr] : reports) {
    const auto [view, demand_id] = key;
    auto it = outcomes_.find(demand_id);
    if (it == outcomes_.end()) continue;
    auto& out = it->second;
    if (!pr.src || !pr.dst || pr.src->paths.size() != pr.dst->paths.size()) {
      ++out.aborts;
      continue;
    }
    const Demand& demand = pr.src->demand;
    std::vector<PathOutcome> paths;
    std::map<std::uint32_t, std::uint64_t> amounts;
    for (std::size_t j = 0; j < pr.src->paths.size(); ++j) {
      const auto& sp = pr.src->paths[j];
      const auto& dp = pr.dst->paths[j];
      if (!sp.segment || !dp.segment) continue;
      bool compromised = false;
      for (std::size_t h = 1; h + 1 < sp.path.size(); ++h)
        if (cfg_.adversary.is_byzantine(sp.path[h])) {
          compromised = true;
          for (std::size_t hop : {h - 1, h})
            ledger_.record_exposure({view, demand_id, sp.path_id, sp.path[h], delivery_tag(view, demand_id, sp.path_id, hop)});
        }
      paths.push_back({sp.path_id, sp.path, *sp.segment, *dp.segment,
                       std::min(sp.consistent_calibrations, dp.consistent_calibrations), compromised});
      amounts[sp.path_id] = sp.amount_bits;
    }
    const std::uint64_t pa_seed = derive_seed(cfg_.seed, {0x7070, view, demand_id});
    std::set<std::uint32_t> repaired;
    auto result = finalize_demand(demand, paths, f_, repaired, pa_seed, cfg_.params);
    if (const auto* plan = std::get_if<RecoveryPlan>(&result)) {
      bool ok = true;
      for (std::uint32_t pid : plan->paths) {
        auto po = std::find_if(paths.begin(), paths.end(), [&](const PathOutcome& x) { return x.path_id == pid; });
        ledger_.record_evidence("view " + std::to_string(view) + " demand " + std::to_string(demand_id) + " path " +
                                std::to_string(pid) + ": KC mismatch, path rerun both ways and exposed");
        const Path back(po->path.rbegin(), po->path.rend());
        const std::uint64_t amount = amounts[pid];
        try {
          std::vector<KeyBlock> fwd, bwd;
          for (std::size_t h = 0; h + 1 < po->path.size(); ++h) {
            fwd.push_back(keys_.consume_tagged(delivery_tag(view, demand_id, pid, h) + "/fwd",
                                               Edge(po->path[h], po->path[h + 1]), amount, KeyPurpose::Delivery));
            bwd.push_back(keys_.consume_tagged(delivery_tag(view, demand_id, pid, h) + "/bwd",
                                               Edge(back[h], back[h + 1]), amount, KeyPurpose::Delivery));
          }
          repair_bits_ += 2 * amount * (po->path.size() - 1);
          const auto rr = bidirectional_repair(po->path, fwd, honest_closures(po->path, pid, fwd), bwd,
                                               honest_closures(back, pid, bwd));
          po->src_segment = rr.src_segment;
          po->dst_segment = rr.dst_segment;
          repaired.insert(pid);
        } catch (const InsufficientKey&) {
          ok = false;
        }
      }
      result = ok ? finalize_demand(demand, paths, f_, repaired, pa_seed, cfg_.params)
                  : FinalizeResult(DemandAbort{demand_id, "repair key exhausted"});
    }
    if (const auto* key = std::get_if<EndToEndKey>(&result)) {
      if (key->final_bits != key->dst_final_bits) ledger_.flag_safety("endpoint keys differ for demand " + std::to_string(demand_id));
      out.eavesdrop_percent =
          out.delivered_pre_pa_bits == 0 ? key->leaked.percent() : std::max(out.eavesdrop_percent, key->leaked.percent());
      out.delivered_pre_pa_bits += key->pre_pa_bits.size();
      out.final_key_bits += key->final_bits.size();
      out.beta = key->leaked.beta;
      out.exposed_paths.insert(out.exposed_paths.end(), key->exposed_paths.begin(), key->exposed_paths.end());
      if (out.delivered_pre_pa_bits >= out.demand.amount_bits) {
        out.served = true;
        out.served_at = now_;
      }
    } else {
      ++out.aborts;
      if (keep_trace_)
        trace_.push_back("t=" + std::to_string(now_) + " demand " + std::to_string(demand_id) + " aborted in view " +
                         std::to_string(view));
    }
  }
}

void World::advance_slot() {
  if (done_) return;
  const auto [lo, hi] = queue_.equal_range(now_);
  std::vector<std::vector<const Event*>> inbox(nodes_.size());
  for (auto it = lo; it != hi; ++it) inbox[it->second.recipient].push_back(&it->second);
  for (NodeId i = 0; i < nodes_.size(); ++i)
    for (const Event* e : inbox[i]) nodes_[i].handle_message(e->message, now_);
  queue_.erase(lo, hi);

  std::uint64_t max_view_before = 0;
  for (const auto& n : nodes_) max_view_before = std::max(max_view_before, n.state().view);
  for (NodeId i = 0; i < nodes_.size(); ++i) route(i, nodes_[i].close_slot(now_));
  finalize_deliveries();

  const bool all_served = std::all_of(outcomes_.begin(), outcomes_.end(),
                                      [](const auto& kv) { return kv.second.synthetic || kv.second.served; });
  std::uint64_t max_view = 0;
  for (NodeId i = 0; i < nodes_.size(); ++i)
    if (honest(i)) max_view = std::max(max_view, nodes_[i].state().view);
  const Tick tick_limit = static_cast<Tick>(cfg_.view_limit) * 16 + 16;
  if (all_served || max_view >= cfg_.view_limit || now_ >= tick_limit) {
    done_ = true;
    end_tick_ = now_;
  } else {
    if (max_view != max_view_before || now_ == 0) refresh_board();
    for (NodeId i = 0; i < nodes_.size(); ++i) route(i, nodes_[i].open_slot(now_));
    ++now_;
  }
  if (keep_trace_)
    for (auto& n : nodes_)
      for (auto& line : n.take_trace()) trace_.push_back(std::move(line));
  if (done_) audit();
}

void World::audit() {
  std::map<std::uint64_t, std::set<std::uint64_t>> per_view;
  for (NodeId i = 0; i < nodes_.size(); ++i) {
    if (!honest(i)) continue;
    for (const auto& c : nodes_[i].commits()) {
      ledger_.record_commit(c);
      per_view[c.view].insert(c.digest);
    }
    for (const auto& rec : nodes_[i].view_records()) {
      const Tick deadline = rec.start + 8;
      if (deadline > end_tick_) continue;
      const bool resolved = (rec.resolved_at && *rec.resolved_at <= deadline) || (rec.left_at && *rec.left_at <= deadline);
      if (!resolved)
        ledger_.flag_liveness("node " + std::to_string(i) + " did not resolve view " + std::to_string(rec.view) +
                              " by tick " + std::to_string(deadline));
    }
    for (const auto& ev : nodes_[i].evidence())
      ledger_.record_evidence("node " + std::to_string(i) + " holds equivocation evidence for view " +
                              std::to_string(ev.first.view));
  }
  for (const auto& [view, digests] : per_view)
    if (digests.size() > 1)
      ledger_.flag_safety("view " + std::to_string(view) + ": " + std::to_string(digests.size()) +
                          " distinct honest commit digests");
}

MetricsReport World::report() const {
  MetricsReport r;
  r.scenario = cfg_.name;
  r.topology = cfg_.topology_name;
  r.f = f_;
  const auto& led = keys_.ledger();
  r.consensus_bits = led.total_consensus();
  r.delivery_bits = led.total_delivery();
  r.total_bits = led.total();
  bool any_real = false;
  for (const auto& [id, o] : outcomes_) {
    r.demands.push_back(o);
    if (!o.synthetic) {
      r.eavesdrop_worst_percent = any_real ? std::max(r.eavesdrop_worst_percent, o.eavesdrop_percent) : o.eavesdrop_percent;
      any_real = true;
    }
  }
  r.ticks = done_ ? end_tick_ : now_;
  r.time_s = static_cast<double>(r.ticks) * cfg_.delta_seconds;
  for (NodeId i = 0; i < nodes_.size(); ++i) {
    const auto& n = nodes_[i];
    if (honest(i)) {
      const auto left = static_cast<std::uint64_t>(std::count_if(n.view_records().begin(), n.view_records().end(),
                                                                 [](const ViewRecord& v) { return v.left_at.has_value(); }));
      r.views_executed = std::max(r.views_executed, left);
    }
    const auto& s = n.stats();
    r.ts_keys_drawn += s.keys_drawn;
    r.consensus_closed_form_bits +=
        s.keys_drawn * ts_key_draw_bits(cfg_.graph.neighbors(i).size(), f_, cfg_.params);
    r.auth_tags += s.messages_signed;
    for (const auto& [reason, count] : s.ts_rejections) r.ts_rejections += count;
    r.dropped_late += s.dropped_late;
  }
  r.auth_key_bits = r.auth_tags * cfg_.params.auth_key_bits();
  for (const auto& [view, digests] : ledger_.honest_commits())
    if (digests.size() == 1)
      if (const auto it = seen_proposals_.find(*digests.begin()); it != seen_proposals_.end())
        r.delivery_closed_form_bits += plan_bits(it->second);
  r.delivery_closed_form_bits += repair_bits_;
  r.safety_violation = !ledger_.safety_violations().empty();
  r.liveness_violation = !ledger_.liveness_violations().empty();
  r.violations = ledger_.safety_violations();
  r.violations.insert(r.violations.end(), ledger_.liveness_violations().begin(), ledger_.liveness_violations().end());
  r.evidence = ledger_.evidence();
  r.forged_sent = adv_.forged_sent;
  return r;
}

MetricsReport run_scenario(const ScenarioConfig& cfg, std::vector<std::string>& trace) {
  cfg.validate();
  if (cfg.fault_bound() > byzantine_capacity(cfg.graph)) {
    MetricsReport r;
    r.scenario = cfg.name;
    r.topology = cfg.topology_name;
    r.f = cfg.fault_bound();
    r.infeasible = true;
    r.eavesdrop_worst_percent = 100.0;
    for (const auto& d : cfg.demands) r.demands.push_back(DemandOutcome{.demand = d});
    return r;
  }
  World w(cfg, true);
  while (!w.done()) w.advance_slot();
  trace = w.trace();
  return w.report();
}

MetricsReport run_scenario(const ScenarioConfig& cfg) {
  cfg.validate();
  if (cfg.fault_bound() > byzantine_capacity(cfg.graph)) {
    std::vector<std::string> unused;
    return run_scenario(cfg, unused);
  }
  World w(cfg, false);
  while (!w.done()) w.advance_slot();
  return w.report();
}

}  // namespace itsbft
