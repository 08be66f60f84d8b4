#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "itsbft/its_crypto.hpp"
#include "itsbft/key_distribution.hpp"
#include "itsbft/link_keystore.hpp"
#include "itsbft/messages.hpp"
#include "itsbft/proposal.hpp"
#include "itsbft/topology.hpp"

namespace itsbft {

/// Information every node can read: the outstanding key requests and the
/// per-link budget proposals may spend in the current view.
struct PublicBoard {
  std::vector<Demand> pending;  // amount_bits = bits still owed
  LinkBalances budget;
};

struct NodeConfig {
  const Graph* graph = nullptr;
  Keystore* keys = nullptr;  // the node touches only its incident links
  const PublicBoard* board = nullptr;
  SecurityParams params;
  std::size_t f = 0;
  std::uint64_t cap_bits = 300'000;
  std::uint64_t seed = 0;  // public seed base for PA of TS keys and calibrations
  Tick validity = 1;       // Δ in ticks
};

struct CommitRecord {
  std::uint64_t view = 0;
  std::uint64_t digest = 0;
  NodeId node = 0;
  Tick at = 0;
};

struct ViewState {
  std::uint64_t view = 0;
  NodeId leader = 0;
  Tick start = 0;
  Tick leader_timer_deadline = 8;
  Step phase = Step::Propose;  // last step this node sent in the view
  std::map<std::uint64_t, std::size_t> vote_tally;    // finalized
  std::map<std::uint64_t, std::size_t> revote_tally;  // finalized
  std::optional<Evidence> equivocation_evidence;
  std::size_t viewchange_tally = 0;
};

enum class ViewOutcome { Open, Committed, Bottom, ViewChange };
std::string_view to_string(ViewOutcome o) noexcept;

/// Per-node record of one view, used for the liveness audit.
struct ViewRecord {
  std::uint64_t view = 0;
  NodeId leader = 0;
  Tick start = 0;
  std::optional<Tick> resolved_at;  // first Commit or ViewChange this node sent
  std::optional<Tick> left_at;
  ViewOutcome outcome = ViewOutcome::Open;
};

/// What one endpoint of a demand holds for one path after KC-verify.
struct PathReport {
  std::uint32_t path_id = 0;
  Path path;
  std::uint64_t amount_bits = 0;
  std::optional<BitString> segment;  // missing when closures were incomplete
  std::size_t consistent_calibrations = 0;
};

struct DeliveryReport {
  std::uint64_t view = 0;
  NodeId node = 0;
  bool is_source = false;
  Demand demand;
  std::vector<PathReport> paths;
};

/// Path ids inside one proposal: plan index and path index packed.
inline std::uint32_t make_path_id(std::size_t plan, std::size_t path) {
  return static_cast<std::uint32_t>(plan * 256 + path);
}

/// Delivery key-block tag shared by both endpoints of a hop.
std::string delivery_tag(std::uint64_t view, std::uint32_t demand_id, std::uint32_t path_id, std::size_t hop);

struct NodeStats {
  std::size_t dropped_late = 0;
  std::map<TsReject, std::size_t> ts_rejections;
  std::size_t keys_drawn = 0;
  std::size_t messages_signed = 0;
  std::size_t sign_failures = 0;  // link pools too short for a TS key
};

/// One relay's ITSBFT state machine. Slots are Δ ticks; a view started at T
/// uses slots T (Propose) .. T+6 (KcVerify) and completes at T+7.
class Node {
 public:
  Node(NodeId id, NodeConfig cfg);

  NodeId id() const noexcept { return id_; }

  /// Stores a delivered message; anything older than the validity window
  /// is dropped as untrusted. Disclosed keys are recorded either way.
  void handle_message(const ProtocolMessage& m, Tick now);

  /// Closes slot now: view changes, the step due in this slot, the leader
  /// timer. Returns messages to broadcast.
  std::vector<ProtocolMessage> close_slot(Tick now);

  /// Leader's Propose for a view starting at now. Called after every node
  /// has closed the slot so the board reflects this slot's deliveries.
  std::vector<ProtocolMessage> open_slot(Tick now);

  /// Emits ViewChange once now reaches the deadline of an unresolved view.
  std::vector<ProtocolMessage> on_timer(Tick now);

  const ViewState& state() const noexcept { return view_.state; }
  const std::vector<CommitRecord>& commits() const noexcept { return commits_; }
  /// Equivocation evidence this node verified, across views.
  const std::vector<Evidence>& evidence() const noexcept { return evidence_; }
  const std::vector<ViewRecord>& view_records() const noexcept { return records_; }
  const NodeStats& stats() const noexcept { return stats_; }
  std::vector<DeliveryReport> take_deliveries() { return std::exchange(deliveries_, {}); }
  std::vector<std::string> take_trace() { return std::exchange(trace_, {}); }

  /// Own key for (view, index), if drawn. Lets a scripted Byzantine node
  /// re-sign with a key it really holds.
  const TsKey* key(std::uint64_t view, unsigned index) const;

 private:
  struct Received {
    ProtocolMessage msg;
    Tick at = 0;
    bool own = false;
    std::optional<TsReject> verdict;
  };
  struct ViewData {
    ViewState state;
    std::array<std::vector<Received>, 8> inbox;
    std::optional<Proposal> proposal;
    std::uint64_t digest = 0;
    bool proposal_valid = false;
    std::optional<TemporarySignature> leader_ts;
    std::optional<TemporarySignature> first_ts;  // own Vote (or Propose) tag
    std::optional<Proposal> revoted;
    bool revoted_sent = false, revote_verify_sent = false;
    bool proposed = false, viewchange_sent = false, commit_sent = false;
    std::optional<std::optional<Proposal>> adopted;  // value with f+1 Commit messages; inner empty = bottom
    int last_slot = -1;
  };

  std::size_t n() const { return cfg_.graph->node_count(); }
  std::size_t quorum() const { return 2 * cfg_.f + 1; }
  std::vector<Received>& box(Step s) { return view_.inbox[static_cast<std::size_t>(s)]; }

  std::optional<ProtocolMessage> sign(Step step, std::uint64_t view, unsigned index, Payload payload, Tick now);
  void store(Received r);
  bool verified(Received& r);
  bool leader_tag_ok(const Proposal& p, const TemporarySignature& ts);
  const TsKey* disclosed(NodeId owner, KeyRef ref) const;
  const Graph& disclosure_graph();

  void enter_view(std::uint64_t view, Tick start, NodeId leader, Tick now, const char* how);
  void leave_view(Tick now, ViewOutcome outcome);
  void resolve(Tick now);
  void check_view_changes(Tick now, std::vector<ProtocolMessage>& out);
  void check_catch_up(Tick now);
  void run_slot(Tick now, std::vector<ProtocolMessage>& out);
  void send(std::optional<ProtocolMessage> m, std::vector<ProtocolMessage>& out);
  void send_view_change(Tick now, unsigned index, std::optional<Evidence> ev, std::vector<ProtocolMessage>& out);

  void slot_vote(Tick now, std::vector<ProtocolMessage>& out);
  void slot_verify(Tick now, std::vector<ProtocolMessage>& out);
  void slot_revote(Tick now, std::vector<ProtocolMessage>& out);
  void slot_revote_verify(Tick now, std::vector<ProtocolMessage>& out);
  void slot_commit(Tick now, std::vector<ProtocolMessage>& out);
  void slot_kc_verify(Tick now, std::vector<ProtocolMessage>& out);
  void slot_complete(Tick now);

  std::optional<Evidence> detect_equivocation();
  bool evidence_ok(const Evidence& ev);
  std::vector<KeyClosure> closures_for(const Proposal& p, Tick now);
  std::uint64_t calibration_seed(std::uint64_t view) const;
  void log(Tick now, const std::string& what);

  NodeId id_;
  NodeConfig cfg_;
  ViewData view_;
  std::map<std::pair<std::uint64_t, unsigned>, TsKey> my_keys_;
  std::vector<std::pair<std::uint64_t, unsigned>> undisclosed_;
  std::map<std::tuple<NodeId, std::uint64_t, unsigned>, TsKey> disclosed_;
  std::map<std::uint64_t, std::vector<Received>> future_;
  struct ViewChangeSeen {
    Tick sent_at = 0;
    std::vector<NodeId> certificate;  // non-empty on a relay
  };
  std::map<std::uint64_t, std::map<NodeId, ViewChangeSeen>> view_changes_;
  std::map<std::pair<std::uint64_t, std::string>, bool> leader_tag_cache_;
  std::vector<bool> heard_;
  std::vector<Tick> last_heard_;
  std::optional<Graph> disclosure_graph_;
  std::vector<CommitRecord> commits_;
  std::vector<Evidence> evidence_;
  std::vector<ViewRecord> records_;
  std::vector<DeliveryReport> deliveries_;
  std::vector<std::string> trace_;
  NodeStats stats_;
};

}  // namespace itsbft
