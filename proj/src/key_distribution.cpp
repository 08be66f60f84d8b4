#include "itsbft/key_distribution.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>

namespace itsbft {

KeyClosure make_key_closure(NodeId node, std::uint32_t path_id, const KeyBlock& in_block, const KeyBlock& out_block) {
  if (in_block.material.size() != out_block.material.size())
    throw std::invalid_argument("make_key_closure: in/out block length mismatch");
  return {node, path_id, in_block.material ^ out_block.material};
}

std::vector<KeyClosure> honest_closures(const Path& path, std::uint32_t path_id, std::span<const KeyBlock> links) {
  if (path.size() < 2 || links.size() != path.size() - 1)
    throw std::invalid_argument("honest_closures: need one link block per hop");
  std::vector<KeyClosure> out;
  for (std::size_t i = 1; i + 1 < path.size(); ++i) out.push_back(make_key_closure(path[i], path_id, links[i - 1], links[i]));
  return out;
}

BitString kc_transmit(const Path& path, std::span<const KeyClosure> closures) {
  if (path.size() < 2) throw std::invalid_argument("kc_transmit: path needs two endpoints");
  std::map<NodeId, const KeyClosure*> by_node;
  for (const auto& c : closures) {
    if (std::find(path.begin() + 1, path.end() - 1, c.node) == path.end() - 1)
      throw std::invalid_argument("kc_transmit: closure from node " + std::to_string(c.node) + " not internal to path");
    if (!by_node.emplace(c.node, &c).second)
      throw std::invalid_argument("kc_transmit: duplicate closure from node " + std::to_string(c.node));
  }
  if (by_node.size() != path.size() - 2) throw std::invalid_argument("kc_transmit: missing closure");
  BitString agg;
  for (std::size_t i = 1; i + 1 < path.size(); ++i) {
    const auto& m = by_node.at(path[i])->material;
    if (i == 1)
      agg = m;
    else
      agg ^= m;
  }
  return agg;
}

BitString recover_at_destination(const BitString& aggregate, const BitString& last_link) {
  if (aggregate.empty()) return last_link;
  return aggregate ^ last_link;
}

Calibration calibrate(std::uint32_t path_id, const Path& path, std::span<const KeyClosure> closures,
                      std::uint64_t pa_seed, NodeId reporter) {
  return {path_id, pa_digest64(kc_transmit(path, closures), derive_seed(pa_seed, {path_id})), reporter};
}

std::size_t post_process_length(std::size_t pre_pa_bits, LeakedFraction leaked, const SecurityParams& params) {
  if (leaked.beta == 0 || leaked.leaked > leaked.beta) throw std::invalid_argument("post_process: leaked fraction out of [0, 1]");
  const std::size_t kept = pre_pa_bits * (leaked.beta - leaked.leaked) / leaked.beta;
  const std::size_t margin = params.pa_margin_bits();
  return kept > margin ? kept - margin : 0;
}

BitString post_process(const BitString& pre_pa, LeakedFraction leaked, std::uint64_t pa_seed,
                       const SecurityParams& params) {
  const std::size_t len = post_process_length(pre_pa.size(), leaked, params);
  if (len == 0) return {};
  return privacy_amplify(pre_pa, len, pa_seed);
}

FinalizeResult finalize_demand(const Demand& demand, std::span<const PathOutcome> outcomes, std::size_t f,
                               const std::set<std::uint32_t>& repaired, std::uint64_t pa_seed,
                               const SecurityParams& params) {
  if (outcomes.size() <= f) return DemandAbort{demand.id, "fewer than f+1 paths"};
  RecoveryPlan plan{demand.id, {}};
  for (const auto& o : outcomes) {
    if (o.consistent_calibrations < f + 1) return DemandAbort{demand.id, "fewer than f+1 consistent calibrations"};
    if (o.src_segment != o.dst_segment) {
      if (repaired.count(o.path_id) != 0) return DemandAbort{demand.id, "path failed after bidirectional repair"};
      plan.paths.push_back(o.path_id);
    }
  }
  if (!plan.paths.empty()) return plan;

  EndToEndKey key;
  key.demand_id = demand.id;
  key.src = demand.src;
  key.dst = demand.dst;
  BitString dst_pre;
  key.leaked.beta = outcomes.size();
  for (const auto& o : outcomes) {
    key.pre_pa_bits.append(o.src_segment);
    dst_pre.append(o.dst_segment);
    const bool exposed = repaired.count(o.path_id) != 0;
    if (exposed) key.exposed_paths.push_back(o.path_id);
    if (exposed || o.compromised) ++key.leaked.leaked;
  }
  key.final_bits = post_process(key.pre_pa_bits, key.leaked, pa_seed, params);
  key.dst_final_bits = post_process(dst_pre, key.leaked, pa_seed, params);
  return key;
}

RepairResult bidirectional_repair(const Path& path, std::span<const KeyBlock> forward_links,
                                  std::span<const KeyClosure> forward_closures, std::span<const KeyBlock> backward_links,
                                  std::span<const KeyClosure> backward_closures) {
  const Path back(path.rbegin(), path.rend());
  if (forward_links.size() != path.size() - 1 || backward_links.size() != path.size() - 1)
    throw std::invalid_argument("bidirectional_repair: need one link block per hop in each direction");
  const BitString fwd_at_dst = recover_at_destination(kc_transmit(path, forward_closures), forward_links.back().material);
  const BitString bwd_at_src = recover_at_destination(kc_transmit(back, backward_closures), backward_links.back().material);
  return {forward_links.front().material ^ bwd_at_src, fwd_at_dst ^ backward_links.front().material};
}

}  // namespace itsbft
