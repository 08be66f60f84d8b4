#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "itsbft/consensus.hpp"
#include "itsbft/its_crypto.hpp"
#include "itsbft/key_distribution.hpp"
#include "itsbft/link_keystore.hpp"
#include "itsbft/topology.hpp"

namespace itsbft {

enum class Behavior {
  EquivocatePropose,
  Withhold,
  DelayBeyondDelta,
  EavesdropRelayedKeys,
  ResourceContention,
  ForgedRequirement,
  ForgedRoute,
  TamperKc,
  ForgeTsAttempt,
  StallAfterPropose,
};
std::string_view to_string(Behavior b) noexcept;
std::optional<Behavior> behavior_from_string(std::string_view s) noexcept;
const std::vector<Behavior>& all_behaviors();

struct AdversaryScript {
  std::set<NodeId> byzantine_set;
  std::map<NodeId, std::vector<Behavior>> behaviors;

  bool is_byzantine(NodeId n) const { return byzantine_set.count(n) != 0; }
  bool has(NodeId n, Behavior b) const;
  friend bool operator==(const AdversaryScript&, const AdversaryScript&) = default;
};

struct ScenarioConfig {
  std::string name = "scenario";
  std::string topology_name = "custom";  // label for the summary table
  Graph graph;
  std::uint64_t capacity_bits = 10'000'000;
  std::vector<Demand> demands;
  AdversaryScript adversary;
  std::optional<std::size_t> f;  // protocol fault bound; defaults to |byzantine_set|
  double delta_seconds = 1.0;
  SecurityParams params;
  std::uint64_t cap_bits = 300'000;
  std::uint64_t seed = 1;
  std::uint64_t view_limit = 10;
  std::uint64_t contention_bits = 2'000'000;  // size of each synthetic resource-contention demand

  std::size_t fault_bound() const { return f.value_or(adversary.byzantine_set.size()); }
  /// Throws std::invalid_argument naming the offending field.
  void validate() const;

  friend bool operator==(const ScenarioConfig&, const ScenarioConfig&) = default;
};

/// Simulated-network message in flight.
struct Event {
  Tick deliver_at = 0;
  NodeId recipient = 0;
  ProtocolMessage message;
};

/// Ground truth only the simulator sees: which delivery blocks Byzantine
/// relays held, commits per view, and violations. Append-only.
class OmniscientLedger {
 public:
  struct Exposure {
    std::uint64_t view = 0;
    std::uint32_t demand_id = 0;
    std::uint32_t path_id = 0;
    NodeId observer = 0;
    std::string block_tag;
  };

  void record_exposure(Exposure e) { exposures_.push_back(std::move(e)); }
  void record_commit(const CommitRecord& c) { commits_[c.view].insert(c.digest); }
  void record_evidence(std::string what) { evidence_.push_back(std::move(what)); }
  void flag_safety(std::string what) { safety_.push_back(std::move(what)); }
  void flag_liveness(std::string what) { liveness_.push_back(std::move(what)); }

  const std::vector<Exposure>& exposures() const noexcept { return exposures_; }
  const std::map<std::uint64_t, std::set<std::uint64_t>>& honest_commits() const noexcept { return commits_; }
  const std::vector<std::string>& evidence() const noexcept { return evidence_; }
  const std::vector<std::string>& safety_violations() const noexcept { return safety_; }
  const std::vector<std::string>& liveness_violations() const noexcept { return liveness_; }

 private:
  std::vector<Exposure> exposures_;
  std::map<std::uint64_t, std::set<std::uint64_t>> commits_;
  std::vector<std::string> evidence_;
  std::vector<std::string> safety_;
  std::vector<std::string> liveness_;
};

struct DemandOutcome {
  Demand demand;
  bool synthetic = false;  // injected by resource contention
  std::uint64_t delivered_pre_pa_bits = 0;
  std::uint64_t final_key_bits = 0;
  std::size_t beta = 0;  // paths used in the last delivering view
  double eavesdrop_percent = 100.0;  // max over delivering views; 100 when nothing was delivered
  std::vector<std::uint32_t> exposed_paths{};
  std::size_t aborts = 0;
  bool served = false;
  std::optional<Tick> served_at{};
  friend bool operator==(const DemandOutcome&, const DemandOutcome&) = default;
};

struct MetricsReport {
  std::string scenario;
  std::string topology;
  std::size_t f = 0;
  bool infeasible = false;  // f above the topology's Byzantine capacity: not run
  std::uint64_t consensus_bits = 0;
  std::uint64_t delivery_bits = 0;
  std::uint64_t total_bits = 0;
  double eavesdrop_worst_percent = 0;
  std::vector<DemandOutcome> demands;
  Tick ticks = 0;
  double time_s = 0;
  std::uint64_t views_executed = 0;
  bool safety_violation = false;
  bool liveness_violation = false;
  std::vector<std::string> violations;
  std::vector<std::string> evidence;
  // Internal-consistency figures.
  std::uint64_t ts_keys_drawn = 0;
  std::uint64_t consensus_closed_form_bits = 0;  // sum of TS-key draws by node degree
  std::uint64_t auth_tags = 0;
  std::uint64_t auth_key_bits = 0;  // taken from TS keys, not from links
  std::uint64_t delivery_closed_form_bits = 0;  // committed plans plus repairs
  std::uint64_t ts_rejections = 0;
  std::uint64_t dropped_late = 0;
  std::uint64_t forged_sent = 0;

  friend bool operator==(const MetricsReport&, const MetricsReport&) = default;
};

/// Mutable adversary bookkeeping shared by all Byzantine nodes.
struct AdversaryState {
  std::mt19937_64 rng;
  std::set<std::pair<NodeId, std::uint64_t>> stalled_views;
  std::set<NodeId> tampered;
  std::uint64_t forged_sent = 0;
};

/// Turns a Byzantine node's honest outbound broadcasts into the scripted
/// deviation (per-recipient events). Re-signing uses only keys the node holds.
std::vector<Event> adversary_act(const AdversaryScript& script, const Node& node, Tick slot,
                                 std::vector<ProtocolMessage> outbound, AdversaryState& state, const Graph& g,
                                 const SecurityParams& params, Tick validity);

/// A forged TS claiming claimed_signer: uniformly random tag bits.
TemporarySignature forge_signature(std::mt19937_64& rng, NodeId claimed_signer, KeyRef ref, Tick at,
                                   const SecurityParams& params);

class World {
 public:
  explicit World(ScenarioConfig cfg, bool keep_trace = false);
  World(const World&) = delete;  // nodes point into the world
  World& operator=(const World&) = delete;

  Tick now() const noexcept { return now_; }
  bool done() const noexcept { return done_; }
  /// Delivers due events, closes the slot at every node in id order,
  /// finalizes deliveries, opens the next view's Propose, advances by one Δ.
  void advance_slot();
  MetricsReport report() const;

  const OmniscientLedger& ledger() const noexcept { return ledger_; }
  const Keystore& keystore() const noexcept { return keys_; }
  const std::vector<Node>& nodes() const noexcept { return nodes_; }
  const std::vector<std::string>& trace() const noexcept { return trace_; }
  const PublicBoard& board() const noexcept { return board_; }

 private:
  void route(NodeId sender, std::vector<ProtocolMessage> out);
  void finalize_deliveries();
  void refresh_board();
  void audit();
  bool honest(NodeId n) const { return !cfg_.adversary.is_byzantine(n); }

  ScenarioConfig cfg_;
  std::size_t f_;
  Keystore keys_;
  PublicBoard board_;
  std::vector<Node> nodes_;
  std::multimap<Tick, Event> queue_;
  AdversaryState adv_;
  OmniscientLedger ledger_;
  std::map<std::uint32_t, DemandOutcome> outcomes_;
  std::map<std::uint64_t, Proposal> seen_proposals_;  // by digest
  std::uint64_t repair_bits_ = 0;
  Tick now_ = 0;
  Tick end_tick_ = 0;
  bool done_ = false;
  bool keep_trace_;
  std::vector<std::string> trace_;
};

/// Runs to completion (all real demands served or the view limit).
/// Over-bound fault counts produce an infeasible report without running.
MetricsReport run_scenario(const ScenarioConfig& cfg);

/// Same run, also returning the line-oriented trace.
MetricsReport run_scenario(const ScenarioConfig& cfg, std::vector<std::string>& trace);

}  // namespace itsbft
