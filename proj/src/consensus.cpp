#include "itsbft/consensus.hpp"

#include <algorithm>
#include <stdexcept>

namespace itsbft {

std::string_view to_string(ViewOutcome o) noexcept {
  switch (o) {
    case ViewOutcome::Open: return "open";
    case ViewOutcome::Committed: return "committed";
    case ViewOutcome::Bottom: return "bottom";
    case ViewOutcome::ViewChange: return "view-change";
  }
  return "?";
}

std::string delivery_tag(std::uint64_t view, std::uint32_t demand_id, std::uint32_t path_id, std::size_t hop) {
  return "v" + std::to_string(view) + "/d" + std::to_string(demand_id) + "/p" + std::to_string(path_id) + "/h" +
         std::to_string(hop);
}

Node::Node(NodeId id, NodeConfig cfg) : id_(id), cfg_(cfg) {
  if (!cfg_.graph || !cfg_.keys || !cfg_.board) throw std::invalid_argument("Node: graph, keystore and board required");
  if (!cfg_.graph->contains(id)) throw std::invalid_argument("Node: id outside graph");
  heard_.assign(n(), false);
  heard_[id_] = true;
  last_heard_.assign(n(), 0);
  enter_view(0, 0, 0, 0, "bootstrap");
}

const TsKey* Node::key(std::uint64_t view, unsigned index) const {
  const auto it = my_keys_.find({view, index});
  return it == my_keys_.end() ? nullptr : &it->second;
}

const TsKey* Node::disclosed(NodeId owner, KeyRef ref) const {
  const auto it = disclosed_.find({owner, ref.view, ref.step});
  return it == disclosed_.end() ? nullptr : &it->second;
}

const Graph& Node::disclosure_graph() {
  if (!disclosure_graph_) disclosure_graph_ = cfg_.graph->induced(heard_);
  return *disclosure_graph_;
}

void Node::log(Tick now, const std::string& what) {
  trace_.push_back("t=" + std::to_string(now) + " node=" + std::to_string(id_) + " view=" +
                   std::to_string(view_.state.view) + " " + what);
}

// --- message intake -----------------------------------------------------------

void Node::handle_message(const ProtocolMessage& m, Tick now) {
  if (m.source >= n() || m.source == id_) return;
  for (const auto& k : m.disclosed)
    if (k.owner == m.source && k.disclosed) disclosed_.emplace(std::make_tuple(k.owner, k.view, k.step_index), k);
  if (now - m.ts.signed_at > cfg_.validity) {
    ++stats_.dropped_late;
    return;
  }
  last_heard_[m.source] = std::max(last_heard_[m.source], now);
  if (!heard_[m.source]) {
    heard_[m.source] = true;
    disclosure_graph_.reset();
  }
  if (m.view < view_.state.view) return;
  if (m.step == Step::ViewChange) {
    auto& seen = view_changes_[m.view][m.source];
    seen.sent_at = m.ts.signed_at;
    if (!m.payload.supporters.empty()) seen.certificate = m.payload.supporters;
  }
  Received r{m, now, false, std::nullopt};
  if (m.view == view_.state.view)
    store(std::move(r));
  else
    future_[m.view].push_back(std::move(r));
}

void Node::store(Received r) { box(r.msg.step).push_back(std::move(r)); }

bool Node::verified(Received& r) {
  if (r.own) return true;
  if (r.verdict) return *r.verdict == TsReject::None;
  const auto& m = r.msg;
  const auto& ts = m.ts;
  const bool ref_ok = ts.signer == m.source && ts.key_ref.view == m.view &&
                      (m.step == Step::ViewChange ? ts.key_ref.step >= key_index::kVerify
                                                  : ts.key_ref.step == key_index_for(m.step));
  TsReject reason = TsReject::BadTag;
  if (ref_ok) {
    const TsKey* k = disclosed(m.source, ts.key_ref);
    if (!k) return false;  // undecidable until the key shows up
    reason = ts_verify(ts, signing_bytes(m), *k, disclosure_graph(), id_, cfg_.f, r.at, cfg_.validity, cfg_.params)
                 .reason;
  }
  r.verdict = reason;
  if (reason != TsReject::None) ++stats_.ts_rejections[reason];
  return reason == TsReject::None;
}

bool Node::leader_tag_ok(const Proposal& p, const TemporarySignature& ts) {
  const auto& st = view_.state;
  if (p.view != st.view || p.leader != st.leader || ts.signer != st.leader ||
      ts.key_ref != KeyRef{st.view, key_index::kFirst})
    return false;
  const auto cache_key = std::make_pair(proposal_digest(p), ts.tag.to_hex());
  if (const auto it = leader_tag_cache_.find(cache_key); it != leader_tag_cache_.end()) return it->second;
  std::optional<TsKey> own;
  const TsKey* k = nullptr;
  if (st.leader == id_) {
    if (const TsKey* mine = key(st.view, key_index::kFirst)) {
      own = *mine;
      own->disclosed = true;
      k = &*own;
    }
  } else {
    k = disclosed(st.leader, ts.key_ref);
  }
  if (!k) return false;  // not cached: the key may still arrive
  const bool ok = ts_verify(ts, propose_bytes(p, st.leader), *k, disclosure_graph(), id_, cfg_.f, ts.signed_at,
                            cfg_.validity, cfg_.params)
                      .accepted();
  leader_tag_cache_.emplace(cache_key, ok);
  return ok;
}

// --- sending ------------------------------------------------------------------

std::optional<ProtocolMessage> Node::sign(Step step, std::uint64_t view, unsigned index, Payload payload, Tick now) {
  if (my_keys_.count({view, index})) throw std::logic_error("Node: TS key signs more than one message");
  TsKey k;
  try {
    k = draw_ts_key(*cfg_.keys, *cfg_.graph, id_, view, index, cfg_.f, cfg_.params, cfg_.seed);
  } catch (const InsufficientKey& e) {
    ++stats_.sign_failures;
    log(now, std::string("cannot sign ") + std::string(to_string(step)) + ": " + e.what());
    return std::nullopt;
  }
  ++stats_.keys_drawn;
  ProtocolMessage m{step, view, id_, std::move(payload), {}, {}};
  m.ts = ts_sign(k, signing_bytes(m), now, cfg_.params);
  for (const auto& ref : undisclosed_) {
    auto& old = my_keys_.at(ref);
    old.disclose();
    m.disclosed.push_back(old);
  }
  undisclosed_.clear();
  my_keys_.emplace(std::make_pair(view, index), std::move(k));
  undisclosed_.emplace_back(view, index);
  ++stats_.messages_signed;
  return m;
}

void Node::resolve(Tick now) {
  auto& rec = records_.back();
  if (!rec.resolved_at) rec.resolved_at = now;
}

void Node::send(std::optional<ProtocolMessage> m, std::vector<ProtocolMessage>& out) {
  if (!m) return;
  const Tick now = m->ts.signed_at;
  if (m->view == view_.state.view) {
    view_.state.phase = m->step;
    if (m->step == Step::Commit || m->step == Step::ViewChange) resolve(now);
    if (m->step == Step::ViewChange) view_changes_[m->view][id_] = {now, m->payload.supporters};
    store(Received{*m, now, true, TsReject::None});
  }
  log(now, "send " + std::string(to_string(m->step)));
  out.push_back(std::move(*m));
}

void Node::send_view_change(Tick now, unsigned index, std::optional<Evidence> ev, std::vector<ProtocolMessage>& out) {
  if (view_.viewchange_sent) return;
  Payload pl;
  pl.evidence = ev;
  if (ev) view_.state.equivocation_evidence = ev;
  auto m = sign(Step::ViewChange, view_.state.view, index, std::move(pl), now);
  if (m) view_.viewchange_sent = true;
  send(std::move(m), out);
}

// --- views --------------------------------------------------------------------

void Node::enter_view(std::uint64_t view, Tick start, NodeId leader, Tick now, const char* how) {
  view_ = ViewData{};
  view_.state.view = view;
  view_.state.leader = leader;
  view_.state.start = start;
  view_.state.leader_timer_deadline = start + 8;
  records_.push_back({view, leader, start, std::nullopt, std::nullopt, ViewOutcome::Open});
  log(now, std::string("enter leader=") + std::to_string(leader) + " start=" + std::to_string(start) + " via " + how);
  for (auto it = future_.begin(); it != future_.end() && it->first <= view;) {
    if (it->first == view)
      for (auto& r : it->second) store(std::move(r));
    it = future_.erase(it);
  }
  view_changes_.erase(view_changes_.begin(), view_changes_.lower_bound(view));
  leader_tag_cache_.clear();
}

void Node::leave_view(Tick now, ViewOutcome outcome) {
  if (auto ev = view_.state.equivocation_evidence ? view_.state.equivocation_evidence : detect_equivocation())
    evidence_.push_back(std::move(*ev));
  auto& rec = records_.back();
  rec.left_at = now;
  rec.outcome = outcome;
  log(now, "leave " + std::string(to_string(outcome)));
}

void Node::check_view_changes(Tick now, std::vector<ProtocolMessage>& out) {
  for (bool changed = true; changed;) {
    changed = false;
    const std::uint64_t cur = view_.state.view;
    const auto it = view_changes_.find(cur);
    if (it == view_changes_.end()) break;
    const auto& seen = it->second;
    view_.state.viewchange_tally = seen.size();
    std::optional<Tick> cert_start;
    for (const auto& [src, vc] : seen) {
      std::set<NodeId> distinct(vc.certificate.begin(), vc.certificate.end());
      if (distinct.size() >= cfg_.f + 1) cert_start = cert_start ? std::min(*cert_start, vc.sent_at) : vc.sent_at;
    }
    const bool quorum_here = seen.size() >= cfg_.f + 1;
    if (!quorum_here && !cert_start) break;
    // A certificate pins the start its issuers used, keeping late joiners in step.
    const Tick start = cert_start ? std::min(*cert_start, now) : now;
    if (quorum_here) {
      Payload pl;
      for (const auto& [src, vc] : seen) pl.supporters.push_back(src);
      if (!my_keys_.count({cur, key_index::kRelay})) {
        auto m = sign(Step::ViewChange, cur, key_index::kRelay, std::move(pl), now);
        if (m) {
          log(now, "relay ViewChange certificate");
          out.push_back(std::move(*m));
        }
      }
    }
    resolve(now);
    leave_view(now, ViewOutcome::ViewChange);
    enter_view(cur + 1, start, static_cast<NodeId>((cur + 1) % n()), now, quorum_here ? "view-change" : "certificate");
    changed = true;
  }
}

void Node::check_catch_up(Tick now) {
  // f + 1 sources already voting in a later view: follow them.
  for (auto& [v, msgs] : future_) {
    std::set<NodeId> voters;
    Tick earliest = now;
    NodeId leader = static_cast<NodeId>(v % n());
    for (const auto& r : msgs)
      if (r.msg.step == Step::Vote && r.msg.payload.proposal) {
        voters.insert(r.msg.source);
        earliest = std::min(earliest, r.msg.ts.signed_at);
        leader = r.msg.payload.proposal->leader;
      }
    if (voters.size() >= cfg_.f + 1) {
      leave_view(now, ViewOutcome::ViewChange);
      enter_view(v, earliest - 1, leader, now, "catch-up");
      return;
    }
  }
}

std::vector<ProtocolMessage> Node::close_slot(Tick now) {
  std::vector<ProtocolMessage> out;
  check_view_changes(now, out);
  check_catch_up(now);
  run_slot(now, out);
  auto timer = on_timer(now);
  out.insert(out.end(), std::make_move_iterator(timer.begin()), std::make_move_iterator(timer.end()));
  return out;
}

std::vector<ProtocolMessage> Node::on_timer(Tick now) {
  std::vector<ProtocolMessage> out;
  if (now >= view_.state.leader_timer_deadline && !records_.back().resolved_at) {
    log(now, "leader timer expired");
    send_view_change(now, key_index::kTimer, std::nullopt, out);
  }
  return out;
}

std::vector<ProtocolMessage> Node::open_slot(Tick now) {
  std::vector<ProtocolMessage> out;
  auto& st = view_.state;
  if (st.start != now || st.leader != id_ || view_.proposed) return out;
  view_.proposed = true;
  // Route around relays silent for a whole view timer.
  std::vector<bool> live(n(), true);
  for (NodeId v = 0; v < n(); ++v) live[v] = v == id_ || now < 8 || last_heard_[v] >= now - 8;
  const Graph routable = cfg_.graph->induced(live);
  Payload pl;
  pl.proposal = build_proposal(st.view, id_, cfg_.board->pending, routable, cfg_.f, cfg_.board->budget, cfg_.cap_bits);
  auto m = sign(Step::Propose, st.view, key_index::kFirst, pl, now);
  if (m) {
    view_.proposal = *pl.proposal;
    view_.digest = proposal_digest(*pl.proposal);
    view_.proposal_valid = true;
    view_.leader_ts = m->ts;
    view_.first_ts = m->ts;
  }
  send(std::move(m), out);
  return out;
}

void Node::run_slot(Tick now, std::vector<ProtocolMessage>& out) {
  const Tick slot = now - view_.state.start;
  if (slot <= view_.last_slot) return;
  view_.last_slot = static_cast<int>(slot);
  switch (slot) {
    case 1: slot_vote(now, out); break;
    case 2: slot_verify(now, out); break;
    case 3: slot_revote(now, out); break;
    case 4: slot_revote_verify(now, out); break;
    case 5: slot_commit(now, out); break;
    case 6: slot_kc_verify(now, out); break;
    case 7: slot_complete(now); break;
    default: break;
  }
}

// --- steps --------------------------------------------------------------------

void Node::slot_vote(Tick now, std::vector<ProtocolMessage>& out) {
  const auto& st = view_.state;
  if (st.leader == id_) return;
  const Received* prop = nullptr;
  for (const auto& r : box(Step::Propose))
    if (r.msg.source == st.leader && r.msg.payload.proposal) {
      prop = &r;
      break;
    }
  if (!prop) return;
  const Proposal& p = *prop->msg.payload.proposal;
  view_.proposal = p;
  view_.digest = proposal_digest(p);
  view_.leader_ts = prop->msg.ts;
  const auto check =
      validate_proposal(p, *cfg_.graph, cfg_.f, cfg_.board->budget, cfg_.cap_bits, cfg_.board->pending);
  view_.proposal_valid = check.ok() && p.view == st.view && p.leader == st.leader;
  if (!view_.proposal_valid) {
    log(now, "reject proposal: " + std::string(check.ok() ? "wrong view or leader" : to_string(check.reason)));
    return;
  }
  Payload pl;
  pl.proposal = p;
  pl.leader_ts = prop->msg.ts;
  auto m = sign(Step::Vote, st.view, key_index::kFirst, std::move(pl), now);
  if (m) view_.first_ts = m->ts;
  send(std::move(m), out);
}

void Node::slot_verify(Tick now, std::vector<ProtocolMessage>& out) {
  if (view_.viewchange_sent || !view_.proposal) return;
  if (!view_.proposal_valid) return send_view_change(now, key_index::kVerify, std::nullopt, out);
  const NodeId leader = view_.state.leader;
  std::set<NodeId> sup{leader};
  for (const auto& r : box(Step::Vote))
    if (r.msg.source != leader && r.msg.payload.proposal && proposal_digest(*r.msg.payload.proposal) == view_.digest)
      sup.insert(r.msg.source);
  if (sup.size() < quorum()) return send_view_change(now, key_index::kVerify, std::nullopt, out);
  Payload pl;
  pl.digest = view_.digest;
  pl.supporters.assign(sup.begin(), sup.end());
  send(sign(Step::Verify, view_.state.view, key_index::kVerify, std::move(pl), now), out);
}

std::optional<Evidence> Node::detect_equivocation() {
  const NodeId leader = view_.state.leader;
  std::map<std::uint64_t, std::pair<Proposal, TemporarySignature>> seen;
  const auto consider = [&](const Proposal& p, const TemporarySignature& ts) {
    const auto d = proposal_digest(p);
    if (!seen.count(d) && leader_tag_ok(p, ts)) seen.emplace(d, std::make_pair(p, ts));
  };
  for (const auto& r : box(Step::Propose))
    if (r.msg.source == leader && r.msg.payload.proposal) consider(*r.msg.payload.proposal, r.msg.ts);
  for (Step s : {Step::Vote, Step::Revote})
    for (const auto& r : box(s))
      if (r.msg.payload.proposal && r.msg.payload.leader_ts) consider(*r.msg.payload.proposal, *r.msg.payload.leader_ts);
  if (seen.size() < 2) return std::nullopt;
  auto a = seen.begin(), b = std::next(a);
  return Evidence{a->second.first, a->second.second, b->second.first, b->second.second};
}

bool Node::evidence_ok(const Evidence& ev) {
  return proposal_digest(ev.first) != proposal_digest(ev.second) && leader_tag_ok(ev.first, ev.first_ts) &&
         leader_tag_ok(ev.second, ev.second_ts);
}

void Node::slot_revote(Tick now, std::vector<ProtocolMessage>& out) {
  if (view_.viewchange_sent || !view_.proposal || !view_.proposal_valid) return;
  if (auto ev = detect_equivocation()) {
    log(now, "equivocation detected");
    return send_view_change(now, key_index::kRevote, std::move(ev), out);
  }
  const NodeId leader = view_.state.leader;
  const bool leader_ok = leader_tag_ok(*view_.proposal, *view_.leader_ts);
  std::map<std::uint64_t, std::set<NodeId>> tally;
  if (leader_ok) tally[view_.digest].insert(leader);
  for (auto& r : box(Step::Vote))
    if (r.msg.source != leader && r.msg.payload.proposal && verified(r))
      tally[proposal_digest(*r.msg.payload.proposal)].insert(r.msg.source);
  view_.state.vote_tally.clear();
  for (const auto& [d, s] : tally) view_.state.vote_tally[d] = s.size();
  if (tally[view_.digest].size() < quorum()) return send_view_change(now, key_index::kRevote, std::nullopt, out);
  Payload pl;
  if (leader_ok) {
    pl.proposal = *view_.proposal;
    pl.leader_ts = *view_.leader_ts;
    view_.revoted = *view_.proposal;
  } else {
    log(now, "leader tag unverifiable, revote bottom");
  }
  pl.prior_ts = view_.first_ts;
  auto m = sign(Step::Revote, view_.state.view, key_index::kRevote, std::move(pl), now);
  if (m) view_.revoted_sent = true;
  send(std::move(m), out);
}

void Node::slot_revote_verify(Tick now, std::vector<ProtocolMessage>& out) {
  if (view_.viewchange_sent || !view_.revoted_sent) return;
  for (const auto& r : box(Step::ViewChange))
    if (r.msg.payload.evidence && evidence_ok(*r.msg.payload.evidence)) {
      log(now, "equivocation evidence received");
      return send_view_change(now, key_index::kRevoteVerify, r.msg.payload.evidence, out);
    }
  std::set<NodeId> sup;
  for (const auto& r : box(Step::Revote)) sup.insert(r.msg.source);
  if (sup.size() < quorum()) return send_view_change(now, key_index::kRevoteVerify, std::nullopt, out);
  Payload pl;
  pl.digest = view_.revoted ? view_.digest : 0;
  pl.supporters.assign(sup.begin(), sup.end());
  auto m = sign(Step::RevoteVerify, view_.state.view, key_index::kRevoteVerify, std::move(pl), now);
  if (m) view_.revote_verify_sent = true;
  send(std::move(m), out);
}

std::vector<KeyClosure> Node::closures_for(const Proposal& p, Tick now) {
  std::vector<KeyClosure> out;
  for (std::size_t i = 0; i < p.plans.size(); ++i) {
    const auto& plan = p.plans[i];
    for (std::size_t j = 0; j < plan.paths.size(); ++j) {
      const auto& path = plan.paths[j];
      const auto pos = static_cast<std::size_t>(std::find(path.begin(), path.end(), id_) - path.begin());
      if (pos == path.size()) continue;
      const auto pid = make_path_id(i, j);
      const auto draw = [&](std::size_t hop) {
        return cfg_.keys->consume_tagged(delivery_tag(p.view, plan.demand.id, pid, hop),
                                         Edge(path[hop], path[hop + 1]), plan.amounts[j], KeyPurpose::Delivery);
      };
      try {
        std::optional<KeyBlock> in, outb;
        if (pos > 0) in = draw(pos - 1);
        if (pos + 1 < path.size()) outb = draw(pos);
        if (in && outb) out.push_back(make_key_closure(id_, pid, *in, *outb));
      } catch (const InsufficientKey& e) {
        log(now, std::string("delivery draw failed: ") + e.what());
      }
    }
  }
  return out;
}

void Node::slot_commit(Tick now, std::vector<ProtocolMessage>& out) {
  if (view_.viewchange_sent || !view_.revote_verify_sent) return;
  if (auto ev = detect_equivocation()) {
    log(now, "equivocation detected");
    return send_view_change(now, key_index::kCommit, std::move(ev), out);
  }
  std::map<std::uint64_t, std::pair<std::set<NodeId>, const Proposal*>> tally;
  for (auto& r : box(Step::Revote)) {
    const auto& pl = r.msg.payload;
    if (pl.proposal && pl.leader_ts && verified(r) && leader_tag_ok(*pl.proposal, *pl.leader_ts)) {
      auto& slot = tally[proposal_digest(*pl.proposal)];
      slot.first.insert(r.msg.source);
      slot.second = &*pl.proposal;
    }
  }
  view_.state.revote_tally.clear();
  std::optional<Proposal> value;
  for (const auto& [d, entry] : tally) {
    view_.state.revote_tally[d] = entry.first.size();
    if (!value && entry.first.size() >= cfg_.f + 1) value = *entry.second;
  }
  Payload pl;
  if (value) {
    pl.proposal = *value;
    pl.closures = closures_for(*value, now);
  }
  auto m = sign(Step::Commit, view_.state.view, key_index::kCommit, std::move(pl), now);
  if (m) {
    view_.commit_sent = true;
    if (value) {
      commits_.push_back({view_.state.view, proposal_digest(*value), id_, now});
      log(now, "commit");
    } else {
      log(now, "commit bottom");
    }
  }
  send(std::move(m), out);
}

std::uint64_t Node::calibration_seed(std::uint64_t view) const { return derive_seed(cfg_.seed, {0x6b63766572ULL, view}); }

namespace {

/// Closures for path pid taken from Commit messages carrying digest d; each
/// internal node contributes only its own closure.
template <class Box, class Accept>
std::optional<std::vector<KeyClosure>> path_closures(Box& commits, std::uint64_t d,
                                                     const Path& path, std::uint32_t pid, Accept&& accept) {
  std::map<NodeId, KeyClosure> by_node;
  for (auto& r : commits) {
    if (!r.msg.payload.proposal || proposal_digest(*r.msg.payload.proposal) != d || !accept(r)) continue;
    for (const auto& c : r.msg.payload.closures)
      if (c.path_id == pid && c.node == r.msg.source) by_node.emplace(c.node, c);
  }
  std::vector<KeyClosure> out;
  for (std::size_t i = 1; i + 1 < path.size(); ++i) {
    const auto it = by_node.find(path[i]);
    if (it == by_node.end()) return std::nullopt;
    out.push_back(it->second);
  }
  return out;
}

}  // namespace

void Node::slot_kc_verify(Tick now, std::vector<ProtocolMessage>& out) {
  std::map<std::optional<std::uint64_t>, std::pair<std::set<NodeId>, const Proposal*>> groups;
  for (const auto& r : box(Step::Commit)) {
    const auto& p = r.msg.payload.proposal;
    auto& g = groups[p ? std::optional(proposal_digest(*p)) : std::nullopt];
    g.first.insert(r.msg.source);
    if (p) g.second = &*p;
  }
  for (const auto& [d, g] : groups)
    if (g.first.size() >= cfg_.f + 1) {
      view_.adopted = g.second ? std::optional<Proposal>(*g.second) : std::optional<Proposal>();
      break;
    }
  if (!view_.adopted) return;
  Payload pl;
  if (const auto& p = *view_.adopted) {
    const auto d = proposal_digest(*p);
    for (std::size_t i = 0; i < p->plans.size(); ++i)
      for (std::size_t j = 0; j < p->plans[i].paths.size(); ++j) {
        const auto pid = make_path_id(i, j);
        const auto& path = p->plans[i].paths[j];
        if (auto cs = path_closures(box(Step::Commit), d, path, pid, [](auto&) { return true; }))
          pl.calibrations.push_back(calibrate(pid, path, *cs, calibration_seed(p->view), id_));
      }
  }
  for (const auto& r : box(Step::Commit)) {
    if (r.own) {
      if (const TsKey* k = key(view_.state.view, key_index::kRevoteVerify)) pl.echoed_keys[id_] = k->material;
      continue;
    }
    for (const auto& k : r.msg.disclosed)
      if (k.view == view_.state.view && k.step_index == key_index::kRevoteVerify) pl.echoed_keys[r.msg.source] = k.material;
  }
  send(sign(Step::KcVerify, view_.state.view, key_index::kKcVerify, std::move(pl), now), out);
}

void Node::slot_complete(Tick now) {
  if (!view_.adopted) return;
  const auto& st = view_.state;
  NodeId next = static_cast<NodeId>((st.view + 1) % n());
  if (const auto& p = *view_.adopted) {
    const auto d = proposal_digest(*p);
    for (std::size_t i = 0; i < p->plans.size(); ++i) {
      const auto& plan = p->plans[i];
      const bool is_src = plan.demand.src == id_, is_dst = plan.demand.dst == id_;
      if (!is_src && !is_dst) continue;
      DeliveryReport rep{st.view, id_, is_src, plan.demand, {}};
      for (std::size_t j = 0; j < plan.paths.size(); ++j) {
        const auto pid = make_path_id(i, j);
        const auto& path = plan.paths[j];
        PathReport pr{pid, path, plan.amounts[j], std::nullopt, 0};
        const std::size_t hop = is_src ? 0 : path.size() - 2;
        std::optional<KeyBlock> block;
        try {
          block = cfg_.keys->consume_tagged(delivery_tag(p->view, plan.demand.id, pid, hop),
                                            Edge(path[hop], path[hop + 1]), plan.amounts[j], KeyPurpose::Delivery);
        } catch (const InsufficientKey& e) {
          log(now, std::string("delivery draw failed: ") + e.what());
        }
        auto cs = path_closures(box(Step::Commit), d, path, pid, [&](auto& r) { return verified(r); });
        if (block && cs) {
          const auto agg = kc_transmit(path, *cs);
          pr.segment = is_src ? block->material : recover_at_destination(agg, block->material);
          const auto mine = calibrate(pid, path, *cs, calibration_seed(p->view), id_).digest;
          std::set<NodeId> agree;
          for (const auto& r : box(Step::KcVerify))
            for (const auto& c : r.msg.payload.calibrations)
              if (c.path_id == pid && c.digest == mine) agree.insert(r.msg.source);
          pr.consistent_calibrations = agree.size();
        }
        rep.paths.push_back(std::move(pr));
      }
      deliveries_.push_back(std::move(rep));
    }
    std::map<NodeId, BitString> keys;
    for (NodeId node = 0; node < n(); ++node) {
      std::map<std::string, std::pair<std::set<NodeId>, const BitString*>> echoes;
      for (const auto& r : box(Step::KcVerify))
        if (const auto it = r.msg.payload.echoed_keys.find(node); it != r.msg.payload.echoed_keys.end()) {
          auto& e = echoes[it->second.to_hex() + "/" + std::to_string(it->second.size())];
          e.first.insert(r.msg.source);
          e.second = &it->second;
        }
      keys[node] = BitString(cfg_.params.ts_key_len_bits);
      for (const auto& [hex, e] : echoes)
        if (e.first.size() >= cfg_.f + 1) {
          keys[node] = *e.second;
          break;
        }
    }
    next = elect_leader(st.view + 1, keys, n());
  }
  const std::uint64_t v = st.view;
  leave_view(now, *view_.adopted ? ViewOutcome::Committed : ViewOutcome::Bottom);
  enter_view(v + 1, now, next, now, "completion");
}

}  // namespace itsbft
