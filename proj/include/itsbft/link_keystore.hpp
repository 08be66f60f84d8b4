#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>

#include "itsbft/bits.hpp"
#include "itsbft/topology.hpp"

namespace itsbft {

enum class KeyPurpose { Consensus, Delivery };

/// Raised when a link pool cannot cover a draw. The consensus layer turns
/// this into proposal infeasibility; it is never silently truncated.
class InsufficientKey : public std::runtime_error {
 public:
  InsufficientKey(Edge edge, std::uint64_t requested, std::uint64_t available);
  Edge edge;
  std::uint64_t requested;
  std::uint64_t available;
};

/// Contiguous slice of a link's key stream.
struct KeyBlock {
  Edge edge;
  std::uint64_t offset_bits = 0;
  std::uint64_t length_bits = 0;
  BitString material;
};

/// Simulated QKD key pool for one link. Material at (offset, length) is a
/// pure function of stream_seed, so both endpoints read identical bits.
class KeyPool {
 public:
  KeyPool(Edge edge, std::uint64_t capacity_bits, std::uint64_t stream_seed);

  Edge edge() const noexcept { return edge_; }
  std::uint64_t capacity_bits() const noexcept { return capacity_; }
  std::uint64_t consumed_bits() const noexcept { return consumed_; }
  std::uint64_t available_bits() const noexcept { return capacity_ - consumed_; }
  std::uint64_t stream_seed() const noexcept { return seed_; }

  /// Next unconsumed block; throws InsufficientKey past capacity.
  KeyBlock take(std::uint64_t length_bits);
  /// Reads material without consuming (what either endpoint would hold).
  BitString read(std::uint64_t offset_bits, std::uint64_t length_bits) const;

 private:
  Edge edge_;
  std::uint64_t capacity_;
  std::uint64_t consumed_ = 0;
  std::uint64_t seed_;
};

/// Per-link available bits at some instant.
using LinkBalances = std::map<Edge, std::uint64_t>;

/// Consumption counters tagged by purpose.
struct ConsumptionLedger {
  std::map<Edge, std::uint64_t> consensus_bits;
  std::map<Edge, std::uint64_t> delivery_bits;

  std::uint64_t total_consensus() const;
  std::uint64_t total_delivery() const;
  std::uint64_t total() const { return total_consensus() + total_delivery(); }
};

/// All link pools of a network plus the shared ledger.
class Keystore {
 public:
  Keystore() = default;

  /// Throws std::invalid_argument if the edge already has a pool.
  KeyPool& provision(Edge edge, std::uint64_t capacity_bits, std::uint64_t seed);
  /// One pool per graph edge, each seeded from derive_seed(seed, {a, b}).
  static Keystore for_graph(const Graph& g, std::uint64_t capacity_bits, std::uint64_t seed);

  bool has_pool(Edge edge) const { return pools_.count(edge) != 0; }
  const KeyPool& pool(Edge edge) const;
  std::uint64_t available(Edge edge) const { return pool(edge).available_bits(); }

  KeyBlock consume(Edge edge, std::uint64_t length_bits, KeyPurpose purpose);

  /// Idempotent draw keyed by tag: the first call consumes, later calls with
  /// the same tag return the same block. Used when both endpoints of a link
  /// need the block for one path hop.
  KeyBlock consume_tagged(const std::string& tag, Edge edge, std::uint64_t length_bits, KeyPurpose purpose);

  const ConsumptionLedger& ledger() const noexcept { return ledger_; }
  std::uint64_t total_consumed() const;
  LinkBalances balances() const;
  const std::map<Edge, KeyPool>& pools() const noexcept { return pools_; }

 private:
  std::map<Edge, KeyPool> pools_;
  std::map<std::string, KeyBlock> tagged_;
  ConsumptionLedger ledger_;
};

}  // namespace itsbft
