#include "itsbft/link_keystore.hpp"

#include <numeric>

namespace itsbft {

namespace {

std::string edge_name(Edge e) { return std::to_string(e.a) + "-" + std::to_string(e.b); }

std::uint64_t sum_values(const std::map<Edge, std::uint64_t>& m) {
  return std::accumulate(m.begin(), m.end(), std::uint64_t{0},
                         [](std::uint64_t acc, const auto& kv) { return acc + kv.second; });
}

}  // namespace

InsufficientKey::InsufficientKey(Edge e, std::uint64_t req, std::uint64_t avail)
    : std::runtime_error("insufficient key on link " + edge_name(e) + ": requested " + std::to_string(req) +
                         " bits, " + std::to_string(avail) + " available"),
      edge(e),
      requested(req),
      available(avail) {}

KeyPool::KeyPool(Edge edge, std::uint64_t capacity_bits, std::uint64_t stream_seed)
    : edge_(edge), capacity_(capacity_bits), seed_(stream_seed) {}

KeyBlock KeyPool::take(std::uint64_t length_bits) {
  if (length_bits > available_bits()) throw InsufficientKey(edge_, length_bits, available_bits());
  KeyBlock block{edge_, consumed_, length_bits, read(consumed_, length_bits)};
  consumed_ += length_bits;
  return block;
}

BitString KeyPool::read(std::uint64_t offset_bits, std::uint64_t length_bits) const {
  return stream_bits(seed_, offset_bits, length_bits);
}

std::uint64_t ConsumptionLedger::total_consensus() const { return sum_values(consensus_bits); }
std::uint64_t ConsumptionLedger::total_delivery() const { return sum_values(delivery_bits); }

KeyPool& Keystore::provision(Edge edge, std::uint64_t capacity_bits, std::uint64_t seed) {
  if (has_pool(edge)) throw std::invalid_argument("Keystore: duplicate pool for link " + edge_name(edge));
  return pools_.emplace(edge, KeyPool(edge, capacity_bits, seed)).first->second;
}

Keystore Keystore::for_graph(const Graph& g, std::uint64_t capacity_bits, std::uint64_t seed) {
  Keystore ks;
  for (const auto& e : g.edges()) ks.provision(e, capacity_bits, derive_seed(seed, {e.a, e.b}));
  return ks;
}

const KeyPool& Keystore::pool(Edge edge) const {
  auto it = pools_.find(edge);
  if (it == pools_.end()) throw std::out_of_range("Keystore: no pool for link " + edge_name(edge));
  return it->second;
}

KeyBlock Keystore::consume(Edge edge, std::uint64_t length_bits, KeyPurpose purpose) {
  auto it = pools_.find(edge);
  if (it == pools_.end()) throw std::out_of_range("Keystore: no pool for link " + edge_name(edge));
  KeyBlock block = it->second.take(length_bits);
  if (length_bits > 0) {
    auto& counters = purpose == KeyPurpose::Consensus ? ledger_.consensus_bits : ledger_.delivery_bits;
    counters[edge] += length_bits;
  }
  return block;
}

KeyBlock Keystore::consume_tagged(const std::string& tag, Edge edge, std::uint64_t length_bits, KeyPurpose purpose) {
  if (auto it = tagged_.find(tag); it != tagged_.end()) return it->second;
  KeyBlock block = consume(edge, length_bits, purpose);
  tagged_.emplace(tag, block);
  return block;
}

std::uint64_t Keystore::total_consumed() const {
  std::uint64_t n = 0;
  for (const auto& [e, p] : pools_) n += p.consumed_bits();
  return n;
}

LinkBalances Keystore::balances() const {
  LinkBalances out;
  for (const auto& [e, pool] : pools_) out.emplace(e, pool.available_bits());
  return out;
}

}  // namespace itsbft
