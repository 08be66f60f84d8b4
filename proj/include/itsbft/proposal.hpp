#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string_view>
#include <vector>

#include "itsbft/bits.hpp"
#include "itsbft/encoding.hpp"
#include "itsbft/key_distribution.hpp"
#include "itsbft/link_keystore.hpp"
#include "itsbft/topology.hpp"

namespace itsbft {

/// One demand's share of a proposal: disjoint paths with per-path amounts.
struct DemandPlan {
  Demand demand;  // amount_bits is the amount still outstanding when proposed
  std::vector<Path> paths;
  std::vector<std::uint64_t> amounts;  // one per path; legal only when all equal
  friend bool operator==(const DemandPlan&, const DemandPlan&) = default;
};

struct Proposal {
  std::uint64_t view = 0;
  NodeId leader = 0;
  std::vector<DemandPlan> plans;
  friend bool operator==(const Proposal&, const Proposal&) = default;
};

void encode(ByteWriter& w, const Proposal& p);
std::vector<std::uint8_t> encode(const Proposal& p);
/// 64-bit Toeplitz digest of the canonical encoding under a fixed public seed.
std::uint64_t proposal_digest(const Proposal& p);

/// Per-link bits a proposal would draw for delivery.
std::map<Edge, std::uint64_t> link_usage(const Proposal& p);

/// Leader side. Demands are taken in order; each gets its maximum disjoint
/// path set and per-path amount min(ceil(remaining / beta), cap_bits). A
/// demand is dropped when beta <= f or when any of its links would exceed
/// min(budget, cap_bits) counting earlier plans.
Proposal build_proposal(std::uint64_t view, NodeId leader, std::span<const Demand> demands, const Graph& g,
                        std::size_t f, const LinkBalances& budget, std::uint64_t cap_bits);

enum class ProposalReject { None, UnrequestedDemand, InvalidRoute, NotDisjoint, TooFewPaths, UnequalAmounts, OverBudget };
std::string_view to_string(ProposalReject r) noexcept;

struct ProposalCheck {
  ProposalReject reason = ProposalReject::None;
  std::size_t plan_index = 0;  // offending plan when rejected
  bool ok() const noexcept { return reason == ProposalReject::None; }
  explicit operator bool() const noexcept { return ok(); }
};

/// Replica side; re-derives every legitimacy condition. requested is the
/// public request board (each plan must match one entry exactly).
ProposalCheck validate_proposal(const Proposal& p, const Graph& g, std::size_t f, const LinkBalances& budget,
                                std::uint64_t cap_bits, std::span<const Demand> requested);

/// (64-bit PA digest of the keys concatenated in node-id order) mod n.
/// An empty map (bootstrap) elects node 0.
NodeId elect_leader(std::uint64_t view, const std::map<NodeId, BitString>& disclosed_keys, std::size_t n);

}  // namespace itsbft
