#include "itsbft/proposal.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "itsbft/its_crypto.hpp"

namespace itsbft {

namespace {

constexpr std::uint64_t kDigestSeed = 0x70726f706f73616cULL;  // "proposal"
constexpr std::uint64_t kElectionSeed = 0x656c656374ULL;

std::uint64_t budget_of(const LinkBalances& b, const Edge& e) {
  const auto it = b.find(e);
  return it == b.end() ? 0 : it->second;
}

bool valid_route(const Graph& g, const Demand& d, const Path& p) {
  if (p.size() < 2 || p.front() != d.src || p.back() != d.dst) return false;
  std::set<NodeId> seen;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (!g.contains(p[i]) || !seen.insert(p[i]).second) return false;
    if (i > 0 && !g.has_edge(p[i - 1], p[i])) return false;
  }
  return true;
}

bool internally_disjoint(const std::vector<Path>& paths) {
  std::set<NodeId> internal;
  std::set<Path> distinct;
  for (const auto& p : paths) {
    if (!distinct.insert(p).second) return false;
    for (std::size_t i = 1; i + 1 < p.size(); ++i)
      if (!internal.insert(p[i]).second) return false;
  }
  return true;
}

}  // namespace

void encode(ByteWriter& w, const Proposal& p) {
  w.u64(p.view).u32(p.leader).count(p.plans.size());
  for (const auto& plan : p.plans) {
    w.u32(plan.demand.id).u32(plan.demand.src).u32(plan.demand.dst).u64(plan.demand.amount_bits);
    w.count(plan.paths.size());
    for (const auto& path : plan.paths) {
      w.count(path.size());
      for (NodeId n : path) w.u32(n);
    }
    w.count(plan.amounts.size());
    for (auto a : plan.amounts) w.u64(a);
  }
}

std::vector<std::uint8_t> encode(const Proposal& p) {
  ByteWriter w;
  encode(w, p);
  return w.take();
}

std::uint64_t proposal_digest(const Proposal& p) {
  // Nodes re-digest the same few proposals many times per view.
  thread_local std::map<std::vector<std::uint8_t>, std::uint64_t> memo;
  auto bytes = encode(p);
  if (const auto it = memo.find(bytes); it != memo.end()) return it->second;
  if (memo.size() >= 1024) memo.clear();
  const auto d = pa_digest64(BitString::from_bytes(bytes), kDigestSeed);
  memo.emplace(std::move(bytes), d);
  return d;
}

std::map<Edge, std::uint64_t> link_usage(const Proposal& p) {
  std::map<Edge, std::uint64_t> usage;
  for (const auto& plan : p.plans)
    for (std::size_t i = 0; i < plan.paths.size() && i < plan.amounts.size(); ++i)
      for (std::size_t h = 0; h + 1 < plan.paths[i].size(); ++h)
        usage[Edge(plan.paths[i][h], plan.paths[i][h + 1])] += plan.amounts[i];
  return usage;
}

Proposal build_proposal(std::uint64_t view, NodeId leader, std::span<const Demand> demands, const Graph& g,
                        std::size_t f, const LinkBalances& budget, std::uint64_t cap_bits) {
  Proposal prop{view, leader, {}};
  std::map<Edge, std::uint64_t> usage;
  for (const auto& d : demands) {
    if (d.amount_bits == 0 || d.src == d.dst || !g.contains(d.src) || !g.contains(d.dst)) continue;
    auto ps = max_disjoint_paths(g, d.src, d.dst);
    const std::size_t beta = ps.size();
    if (beta <= f) continue;
    const std::uint64_t per_path = std::min<std::uint64_t>((d.amount_bits + beta - 1) / beta, cap_bits);
    auto trial = usage;
    bool fits = per_path > 0;
    for (const auto& path : ps.paths)
      for (std::size_t h = 0; fits && h + 1 < path.size(); ++h) {
        const Edge e(path[h], path[h + 1]);
        const std::uint64_t limit = std::min<std::uint64_t>(budget_of(budget, e), cap_bits);
        trial[e] += per_path;
        fits = trial[e] <= limit;
      }
    if (!fits) continue;
    usage = std::move(trial);
    prop.plans.push_back({d, std::move(ps.paths), std::vector<std::uint64_t>(beta, per_path)});
  }
  return prop;
}

std::string_view to_string(ProposalReject r) noexcept {
  switch (r) {
    case ProposalReject::None: return "ok";
    case ProposalReject::UnrequestedDemand: return "unrequested-demand";
    case ProposalReject::InvalidRoute: return "invalid-route";
    case ProposalReject::NotDisjoint: return "not-disjoint";
    case ProposalReject::TooFewPaths: return "too-few-paths";
    case ProposalReject::UnequalAmounts: return "unequal-amounts";
    case ProposalReject::OverBudget: return "over-budget";
  }
  return "?";
}

ProposalCheck validate_proposal(const Proposal& p, const Graph& g, std::size_t f, const LinkBalances& budget,
                                std::uint64_t cap_bits, std::span<const Demand> requested) {
  std::set<std::uint32_t> ids;
  for (std::size_t i = 0; i < p.plans.size(); ++i) {
    const auto& plan = p.plans[i];
    const bool known = std::find(requested.begin(), requested.end(), plan.demand) != requested.end();
    if (!known || !ids.insert(plan.demand.id).second) return {ProposalReject::UnrequestedDemand, i};
    for (const auto& path : plan.paths)
      if (!valid_route(g, plan.demand, path)) return {ProposalReject::InvalidRoute, i};
    if (!internally_disjoint(plan.paths)) return {ProposalReject::NotDisjoint, i};
    if (plan.paths.size() <= f) return {ProposalReject::TooFewPaths, i};
    if (plan.amounts.size() != plan.paths.size() || plan.amounts.front() == 0 ||
        std::adjacent_find(plan.amounts.begin(), plan.amounts.end(), std::not_equal_to<>()) != plan.amounts.end())
      return {ProposalReject::UnequalAmounts, i};
  }
  const auto usage = link_usage(p);
  for (const auto& [e, bits] : usage) {
    const std::uint64_t limit = std::min<std::uint64_t>(budget_of(budget, e), cap_bits);
    if (bits > limit) {
      for (std::size_t i = 0; i < p.plans.size(); ++i)
        for (const auto& path : p.plans[i].paths)
          for (std::size_t h = 0; h + 1 < path.size(); ++h)
            if (Edge(path[h], path[h + 1]) == e) return {ProposalReject::OverBudget, i};
    }
  }
  return {};
}

NodeId elect_leader(std::uint64_t view, const std::map<NodeId, BitString>& disclosed_keys, std::size_t n) {
  if (n == 0) throw std::invalid_argument("elect_leader: empty network");
  if (disclosed_keys.empty()) return 0;
  BitString all;
  for (const auto& [node, key] : disclosed_keys) all.append(key);
  return static_cast<NodeId>(pa_digest64(all, derive_seed(kElectionSeed, {view})) % n);
}

}  // namespace itsbft
