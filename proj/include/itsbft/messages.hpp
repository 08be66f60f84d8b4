#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string_view>
#include <vector>

#include "itsbft/encoding.hpp"
#include "itsbft/its_crypto.hpp"
#include "itsbft/key_distribution.hpp"
#include "itsbft/proposal.hpp"

namespace itsbft {

enum class Step : std::uint8_t { Propose, Vote, Verify, Revote, RevoteVerify, Commit, KcVerify, ViewChange };
std::string_view to_string(Step s) noexcept;

/// TS key index a node uses for each step of a view. Propose and Vote share
/// index 1 (only the leader proposes and the leader never votes). Index 7 is
/// the timer-driven ViewChange and 8 the certificate relay.
namespace key_index {
inline constexpr unsigned kFirst = 1, kVerify = 2, kRevote = 3, kRevoteVerify = 4, kCommit = 5, kKcVerify = 6, kTimer = 7,
                          kRelay = 8;
}
unsigned key_index_for(Step s) noexcept;

/// Two Propose payloads from one leader, both tagged under the same key.
struct Evidence {
  Proposal first;
  TemporarySignature first_ts;
  Proposal second;
  TemporarySignature second_ts;
  friend bool operator==(const Evidence&, const Evidence&) = default;
};

/// Step-specific contents. Unused fields stay empty.
struct Payload {
  // Propose: the proposal. Vote / Revote: the proposal the leader sent
  // (absent in a Revote means bottom). Commit: committed proposal or bottom.
  std::optional<Proposal> proposal;
  std::optional<TemporarySignature> leader_ts;  // Vote, Revote: leader's tag over the Propose
  std::optional<TemporarySignature> prior_ts;   // Revote: the sender's own Vote tag
  std::optional<std::uint64_t> digest;          // Verify, RevoteVerify
  std::vector<NodeId> supporters;               // Verify, RevoteVerify: tallied sources; ViewChange: certificate
  std::vector<KeyClosure> closures;             // Commit
  std::vector<Calibration> calibrations;        // KcVerify
  std::map<NodeId, BitString> echoed_keys;      // KcVerify: keys disclosed in Commit messages
  std::optional<Evidence> evidence;             // ViewChange
  friend bool operator==(const Payload&, const Payload&) = default;
};

/// <Step, M, e, TS(Key_S), Key_V>_Source
struct ProtocolMessage {
  Step step = Step::Propose;
  std::uint64_t view = 0;
  NodeId source = 0;
  Payload payload;
  TemporarySignature ts;
  std::vector<TsKey> disclosed;  // sender's earlier keys, now public
  friend bool operator==(const ProtocolMessage&, const ProtocolMessage&) = default;
};

void encode(ByteWriter& w, const TemporarySignature& ts);
void encode(ByteWriter& w, const Payload& p);

/// Bytes the TS covers: step, view, source, payload. The signature itself
/// and the disclosed keys are excluded.
std::vector<std::uint8_t> signing_bytes(Step step, std::uint64_t view, NodeId source, const Payload& payload);
inline std::vector<std::uint8_t> signing_bytes(const ProtocolMessage& m) {
  return signing_bytes(m.step, m.view, m.source, m.payload);
}

/// Bytes of the Propose message that carried p (for checking a leader tag
/// relayed inside a Vote, Revote or Evidence).
std::vector<std::uint8_t> propose_bytes(const Proposal& p, NodeId leader);

}  // namespace itsbft
