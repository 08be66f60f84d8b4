#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "itsbft/bits.hpp"
#include "itsbft/its_crypto.hpp"
#include "itsbft/link_keystore.hpp"
#include "itsbft/topology.hpp"

namespace itsbft {

/// End-to-end key request between two relays.
struct Demand {
  std::uint32_t id = 0;
  NodeId src = 0;
  NodeId dst = 0;
  std::uint64_t amount_bits = 0;
  friend bool operator==(const Demand&, const Demand&) = default;
};

/// XOR of a relay's in-link and out-link blocks on one distribution path.
struct KeyClosure {
  NodeId node = 0;
  std::uint32_t path_id = 0;
  BitString material;
  friend bool operator==(const KeyClosure&, const KeyClosure&) = default;
};

struct Calibration {
  std::uint32_t path_id = 0;
  std::uint64_t digest = 0;
  NodeId reporter = 0;
  friend bool operator==(const Calibration&, const Calibration&) = default;
};

/// Exact rational leaked share, e.g. 1/4 for one compromised path of four.
struct LeakedFraction {
  std::size_t leaked = 0;
  std::size_t beta = 1;
  double percent() const noexcept { return 100.0 * static_cast<double>(leaked) / static_cast<double>(beta); }
};

/// Throws std::invalid_argument when the blocks differ in length.
KeyClosure make_key_closure(NodeId node, std::uint32_t path_id, const KeyBlock& in_block, const KeyBlock& out_block);

/// Closures an honest path would publish given its per-hop link blocks
/// (links[i] joins path[i] and path[i + 1]).
std::vector<KeyClosure> honest_closures(const Path& path, std::uint32_t path_id, std::span<const KeyBlock> links);

/// XOR of the closures of every internal node. Empty for a direct link.
/// Throws std::invalid_argument on a missing, duplicate or foreign closure.
BitString kc_transmit(const Path& path, std::span<const KeyClosure> closures);

/// Destination side of the telescoping identity: aggregate XOR last-link
/// key. An empty aggregate means the segment is the last link itself.
BitString recover_at_destination(const BitString& aggregate, const BitString& last_link);

/// Digest of the closure aggregate under the public per-view seed
/// (64 bits; see pa_digest64).
Calibration calibrate(std::uint32_t path_id, const Path& path, std::span<const KeyClosure> closures,
                      std::uint64_t pa_seed, NodeId reporter);

/// What both endpoints hold for one path after a KC round.
struct PathOutcome {
  std::uint32_t path_id = 0;
  Path path;
  BitString src_segment;
  BitString dst_segment;
  std::size_t consistent_calibrations = 0;
  bool compromised = false;  // a Byzantine relay sits on the path (simulator knowledge)
};

struct EndToEndKey {
  std::uint32_t demand_id = 0;
  NodeId src = 0;
  NodeId dst = 0;
  BitString pre_pa_bits;
  BitString final_bits;      // as computed by src
  BitString dst_final_bits;  // as computed by dst
  LeakedFraction leaked;
  std::vector<std::uint32_t> exposed_paths;
  bool yields_key() const noexcept { return !final_bits.empty(); }
};

struct RecoveryPlan {
  std::uint32_t demand_id = 0;
  std::vector<std::uint32_t> paths;  // rerun in both directions
};

struct DemandAbort {
  std::uint32_t demand_id = 0;
  std::string reason;
};

using FinalizeResult = std::variant<EndToEndKey, RecoveryPlan, DemandAbort>;

/// Turns per-path outcomes into an end-to-end key. Paths listed in
/// repaired were already rerun once; a second mismatch there aborts.
/// Segments are concatenated in path order; leaked counts compromised
/// paths plus repaired (exposed) ones.
FinalizeResult finalize_demand(const Demand& demand, std::span<const PathOutcome> outcomes, std::size_t f,
                               const std::set<std::uint32_t>& repaired, std::uint64_t pa_seed,
                               const SecurityParams& params);

/// floor(n * (beta - leaked) / beta) - margin(epsilon), or 0 if negative.
std::size_t post_process_length(std::size_t pre_pa_bits, LeakedFraction leaked, const SecurityParams& params);

/// Privacy amplification of the concatenated key; empty when no key survives.
BitString post_process(const BitString& pre_pa, LeakedFraction leaked, std::uint64_t pa_seed,
                       const SecurityParams& params);

/// Result of rerunning one path's KC transmission src->dst and dst->src.
/// Each endpoint's repaired segment is its forward key XOR its backward key.
struct RepairResult {
  BitString src_segment;
  BitString dst_segment;
  bool agreed() const { return src_segment == dst_segment; }
};

/// forward_links run along path, backward_links along the reversed path.
RepairResult bidirectional_repair(const Path& path, std::span<const KeyBlock> forward_links,
                                  std::span<const KeyClosure> forward_closures, std::span<const KeyBlock> backward_links,
                                  std::span<const KeyClosure> backward_closures);

}  // namespace itsbft
