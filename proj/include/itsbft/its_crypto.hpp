#pragma once

#include <compare>
#include <cstdint>
#include <span>
#include <string_view>

#include "itsbft/bits.hpp"
#include "itsbft/link_keystore.hpp"
#include "itsbft/topology.hpp"

namespace itsbft {

/// Simulated time in Δ ticks.
using Tick = std::int64_t;

struct SecurityParams {
  double epsilon = 1e-10;    // privacy-amplification security bound
  double epsilon_k = 1e-12;  // authentication failure bound
  unsigned omega = 63;       // authenticator field degree
  std::size_t ts_key_len_bits = 126;

  /// Throws std::invalid_argument on out-of-range values.
  void validate() const;
  std::size_t tag_bits() const noexcept { return omega; }
  /// Key bits one authenticator tag consumes: hash point plus pad.
  std::size_t auth_key_bits() const noexcept { return 2 * std::size_t{omega}; }
  /// ceil(log2(1/epsilon)).
  std::size_t pa_margin_bits() const;

  friend bool operator==(const SecurityParams&, const SecurityParams&) = default;
};

// --- privacy amplification -------------------------------------------------

/// Number of Toeplitz-defining bits for an in_len -> out_len hash.
std::size_t toeplitz_seed_bits(std::size_t in_len, std::size_t out_len) noexcept;

/// Modified Toeplitz hash: out = x[0, m) XOR T * x[m, n), with T the
/// m x (n - m) Toeplitz matrix T[i][j] = matrix_bits[i - j + n - m - 1].
/// When out_len == in_len the map is the identity.
BitString toeplitz_hash(const BitString& input, std::size_t out_len, const BitString& matrix_bits);

/// toeplitz_hash with the matrix expanded from a public 64-bit seed.
BitString privacy_amplify(const BitString& input, std::size_t out_len, std::uint64_t pa_seed);

/// 64-bit digest (or shorter input padded to 64 bits) under a public seed.
std::uint64_t pa_digest64(const BitString& input, std::uint64_t pa_seed);

// --- one-time authentication ------------------------------------------------

struct AuthTag {
  BitString tag;
  std::size_t key_bits_consumed = 0;
};

/// Number of omega-bit blocks the authenticator evaluates for a message of
/// message_bytes bytes: ceil(8 * bytes / omega) data blocks plus one length block.
std::size_t auth_block_count(std::size_t message_bytes, unsigned omega) noexcept;

/// One-time polynomial-evaluation hash over GF(2^omega) masked with a
/// one-time pad. Key layout: bits [0, omega) are the evaluation point k,
/// bits [omega, 2 omega) the pad r. The message is split MSB-first into
/// blocks m_1..m_d (last one zero-padded, then a block holding the bit
/// length) and tag = r XOR sum_i m_i * k^(d - i + 1).
/// Consumes exactly 2 * omega key bits regardless of message length.
/// Throws std::invalid_argument if the key is shorter than 2 * omega or if
/// d * 2^-omega exceeds epsilon_k.
AuthTag auth_tag(const BitString& key, std::span<const std::uint8_t> message, const SecurityParams& params);

// --- temporary signatures ---------------------------------------------------

struct KeyRef {
  std::uint64_t view = 0;
  unsigned step = 0;
  friend auto operator<=>(const KeyRef&, const KeyRef&) = default;
};

struct TsKey {
  NodeId owner = 0;
  std::uint64_t view = 0;
  unsigned step_index = 0;
  BitString material;
  bool disclosed = false;

  KeyRef ref() const noexcept { return {view, step_index}; }
  /// Throws std::logic_error on a second disclosure.
  void disclose();
};

struct TemporarySignature {
  BitString tag;
  NodeId signer = 0;
  Tick signed_at = 0;
  KeyRef key_ref;
  friend bool operator==(const TemporarySignature&, const TemporarySignature&) = default;
};

enum class TsReject { None, BadTag, InsufficientPaths, Expired };
std::string_view to_string(TsReject r) noexcept;

struct TsVerdict {
  TsReject reason = TsReject::None;
  bool accepted() const noexcept { return reason == TsReject::None; }
  explicit operator bool() const noexcept { return accepted(); }
};

/// k = min(f, x - 1): the share count the adversary may hold.
std::size_t ts_share_bits(std::size_t neighbor_count, std::size_t f, std::size_t key_len_bits);

/// PA seed for K_view^step of owner.
std::uint64_t ts_pa_seed(std::uint64_t base, NodeId owner, std::uint64_t view, unsigned step) noexcept;

/// Builds K_TS from one block per incident link. Blocks are concatenated in
/// ascending neighbor-id order and compressed to ts_key_len_bits.
/// Throws std::invalid_argument unless every block is ts_share_bits long and
/// the blocks come from distinct links of owner.
TsKey ts_keygen(NodeId owner, std::uint64_t view, unsigned step, std::span<const KeyBlock> neighbor_blocks,
                std::size_t f, const SecurityParams& params, std::uint64_t pa_seed);

/// Draws the shares from every incident link of owner (purpose Consensus)
/// and runs ts_keygen. Throws InsufficientKey if any pool is short; in that
/// case no pool is touched.
TsKey draw_ts_key(Keystore& keys, const Graph& g, NodeId owner, std::uint64_t view, unsigned step, std::size_t f,
                  const SecurityParams& params, std::uint64_t pa_seed_base);

/// Raw link bits one draw_ts_key call consumes for a node of this degree.
std::size_t ts_key_draw_bits(std::size_t degree, std::size_t f, const SecurityParams& params);

/// Throws std::logic_error when key has already been disclosed.
TemporarySignature ts_sign(const TsKey& key, std::span<const std::uint8_t> message, Tick now,
                           const SecurityParams& params);

/// Accepts iff the message arrived within validity of signing, the disclosed
/// key is the signer's key for sig.key_ref and reproduces the tag, and the
/// disclosure graph holds at least f + 1 disjoint signer-verifier paths.
TsVerdict ts_verify(const TemporarySignature& sig, std::span<const std::uint8_t> message, const TsKey& disclosed_key,
                    const Graph& disclosure_graph, NodeId verifier, std::size_t f, Tick received_at, Tick validity,
                    const SecurityParams& params);

}  // namespace itsbft
