#include "itsbft/messages.hpp"

namespace itsbft {

std::string_view to_string(Step s) noexcept {
  switch (s) {
    case Step::Propose: return "Propose";
    case Step::Vote: return "Vote";
    case Step::Verify: return "Verify";
    case Step::Revote: return "Revote";
    case Step::RevoteVerify: return "RevoteVerify";
    case Step::Commit: return "Commit";
    case Step::KcVerify: return "KcVerify";
    case Step::ViewChange: return "ViewChange";
  }
  return "?";
}

unsigned key_index_for(Step s) noexcept {
  switch (s) {
    case Step::Propose:
    case Step::Vote: return key_index::kFirst;
    case Step::Verify: return key_index::kVerify;
    case Step::Revote: return key_index::kRevote;
    case Step::RevoteVerify: return key_index::kRevoteVerify;
    case Step::Commit: return key_index::kCommit;
    case Step::KcVerify: return key_index::kKcVerify;
    case Step::ViewChange: return key_index::kTimer;
  }
  return 0;
}

void encode(ByteWriter& w, const TemporarySignature& ts) {
  w.bits(ts.tag).u32(ts.signer).u64(static_cast<std::uint64_t>(ts.signed_at)).u64(ts.key_ref.view).u32(ts.key_ref.step);
}

namespace {

template <class T, class F>
void optional_field(ByteWriter& w, const std::optional<T>& v, F&& write) {
  w.boolean(v.has_value());
  if (v) write(*v);
}

}  // namespace

void encode(ByteWriter& w, const Payload& p) {
  optional_field(w, p.proposal, [&](const Proposal& x) { encode(w, x); });
  optional_field(w, p.leader_ts, [&](const TemporarySignature& x) { encode(w, x); });
  optional_field(w, p.prior_ts, [&](const TemporarySignature& x) { encode(w, x); });
  optional_field(w, p.digest, [&](std::uint64_t x) { w.u64(x); });
  w.count(p.supporters.size());
  for (NodeId n : p.supporters) w.u32(n);
  w.count(p.closures.size());
  for (const auto& c : p.closures) w.u32(c.node).u32(c.path_id).bits(c.material);
  w.count(p.calibrations.size());
  for (const auto& c : p.calibrations) w.u32(c.path_id).u64(c.digest).u32(c.reporter);
  w.count(p.echoed_keys.size());
  for (const auto& [n, k] : p.echoed_keys) w.u32(n).bits(k);
  optional_field(w, p.evidence, [&](const Evidence& e) {
    encode(w, e.first);
    encode(w, e.first_ts);
    encode(w, e.second);
    encode(w, e.second_ts);
  });
}

std::vector<std::uint8_t> signing_bytes(Step step, std::uint64_t view, NodeId source, const Payload& payload) {
  ByteWriter w;
  w.u8(static_cast<std::uint8_t>(step)).u64(view).u32(source);
  encode(w, payload);
  return w.take();
}

std::vector<std::uint8_t> propose_bytes(const Proposal& p, NodeId leader) {
  Payload payload;
  payload.proposal = p;
  return signing_bytes(Step::Propose, p.view, leader, payload);
}

}  // namespace itsbft
