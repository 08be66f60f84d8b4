#include "itsbft/its_crypto.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "itsbft/gf2.hpp"

namespace itsbft {

namespace {

std::uint64_t reverse_bits(std::uint64_t v) noexcept {
  v = ((v >> 1) & 0x5555555555555555ULL) | ((v & 0x5555555555555555ULL) << 1);
  v = ((v >> 2) & 0x3333333333333333ULL) | ((v & 0x3333333333333333ULL) << 2);
  v = ((v >> 4) & 0x0f0f0f0f0f0f0f0fULL) | ((v & 0x0f0f0f0f0f0f0f0fULL) << 4);
  return __builtin_bswap64(v);
}

// MSB-first bit string -> LSB-first polynomial coefficients.
std::vector<std::uint64_t> as_poly(const BitString& b) {
  std::vector<std::uint64_t> out(b.words().begin(), b.words().end());
  for (auto& w : out) w = reverse_bits(w);
  return out;
}

BitString reversed(const BitString& b) {
  const auto src = b.words();
  BitString full(src.size() * 64);
  auto dst = full.mutable_words();
  for (std::size_t i = 0; i < src.size(); ++i) dst[src.size() - 1 - i] = reverse_bits(src[i]);
  return full.slice(full.size() - b.size(), b.size());
}

// parity(m[row, row + 64 * x.size()) & x) for every row < rows; m must
// cover rows - 1 + x's bit length bits (x is zero past its length).
BitString window_parities(const BitString& m, const BitString& x, std::size_t rows) {
  const auto mw = m.words();
  const auto xw = x.words();
  BitString y(rows);
  for (std::size_t i = 0; i < rows; ++i) {
    const std::size_t w0 = i / 64, s = i % 64;
    std::uint64_t acc = 0;
    for (std::size_t k = 0; k < xw.size(); ++k) {
      std::uint64_t v = mw[w0 + k] << s;
      if (s != 0 && w0 + k + 1 < mw.size()) v |= mw[w0 + k + 1] >> (64 - s);
      acc ^= v & xw[k];
    }
    if (__builtin_parityll(acc)) y.set(i, true);
  }
  return y;
}

constexpr std::size_t kDirectRows = 128;

}  // namespace

void SecurityParams::validate() const {
  if (!(epsilon > 0 && epsilon < 1)) throw std::invalid_argument("SecurityParams: epsilon must be in (0, 1)");
  if (!(epsilon_k > 0 && epsilon_k < 1)) throw std::invalid_argument("SecurityParams: epsilon_k must be in (0, 1)");
  if (omega < 1 || omega > 64) throw std::invalid_argument("SecurityParams: omega must be in [1, 64]");
  if (ts_key_len_bits < auth_key_bits())
    throw std::invalid_argument("SecurityParams: ts_key_len_bits shorter than 2 * omega");
}

std::size_t SecurityParams::pa_margin_bits() const {
  return static_cast<std::size_t>(std::ceil(-std::log2(epsilon) - 1e-12));
}

std::size_t toeplitz_seed_bits(std::size_t in_len, std::size_t out_len) noexcept {
  if (out_len == 0 || out_len >= in_len) return 0;
  return in_len - 1;
}

BitString toeplitz_hash(const BitString& input, std::size_t out_len, const BitString& matrix_bits) {
  const std::size_t n = input.size();
  if (out_len > n) throw std::invalid_argument("privacy_amplify: output longer than input");
  if (matrix_bits.size() != toeplitz_seed_bits(n, out_len))
    throw std::invalid_argument("privacy_amplify: wrong number of Toeplitz bits");
  BitString head = input.slice(0, out_len);
  const std::size_t cols = n - out_len;
  if (out_len == 0 || cols == 0) return head;
  const BitString tail = input.slice(out_len, cols);

  // y_i = XOR_j t[i - j + cols - 1] x_j
  BitString y(out_len);
  if (out_len <= kDirectRows) {
    y = window_parities(matrix_bits, reversed(tail), out_len);
  } else {
    const auto prod = gf2::poly_mul(as_poly(matrix_bits), as_poly(tail));
    for (std::size_t i = 0; i < out_len; ++i) {
      const std::size_t c = i + cols - 1;
      if ((prod[c / 64] >> (c % 64)) & 1) y.set(i, true);
    }
  }
  head ^= y;
  return head;
}

BitString privacy_amplify(const BitString& input, std::size_t out_len, std::uint64_t pa_seed) {
  const std::size_t nbits = toeplitz_seed_bits(input.size(), out_len);
  return toeplitz_hash(input, out_len, stream_bits(derive_seed(pa_seed, {input.size(), out_len}), 0, nbits));
}

std::uint64_t pa_digest64(const BitString& input, std::uint64_t pa_seed) {
  if (input.size() >= 64) return privacy_amplify(input, 64, pa_seed).read_u64(0, 64);
  BitString padded = input;
  padded.append(BitString(64 - input.size()));
  return padded.read_u64(0, 64);
}

std::size_t auth_block_count(std::size_t message_bytes, unsigned omega) noexcept {
  return (8 * message_bytes + omega - 1) / omega + 1;
}

AuthTag auth_tag(const BitString& key, std::span<const std::uint8_t> message, const SecurityParams& params) {
  const unsigned w = params.omega;
  if (key.size() < params.auth_key_bits()) throw std::invalid_argument("auth_tag: key shorter than 2 * omega");
  const std::size_t blocks = auth_block_count(message.size(), w);
  if (static_cast<double>(blocks) > params.epsilon_k * std::ldexp(1.0, static_cast<int>(w)))
    throw std::invalid_argument("auth_tag: message too long for (omega, epsilon_k)");

  const gf2::Field field(w);
  const std::uint64_t point = key.read_u64(0, w);
  const std::uint64_t pad = key.read_u64(w, w);
  const BitString msg = BitString::from_bytes(message);

  std::uint64_t acc = 0;
  for (std::size_t off = 0; off < msg.size(); off += w) {
    const std::size_t len = std::min<std::size_t>(w, msg.size() - off);
    const std::uint64_t block = msg.read_u64(off, len) << (w - len);
    acc = field.mul(acc ^ block, point);
  }
  acc = field.mul(acc ^ (static_cast<std::uint64_t>(msg.size()) & field.mask()), point);
  return {BitString::from_u64(acc ^ pad, w), params.auth_key_bits()};
}

void TsKey::disclose() {
  if (disclosed) throw std::logic_error("TsKey: already disclosed");
  disclosed = true;
}

std::string_view to_string(TsReject r) noexcept {
  switch (r) {
    case TsReject::None: return "accepted";
    case TsReject::BadTag: return "bad-tag";
    case TsReject::InsufficientPaths: return "insufficient-paths";
    case TsReject::Expired: return "expired";
  }
  return "?";
}

std::size_t ts_share_bits(std::size_t neighbor_count, std::size_t f, std::size_t key_len_bits) {
  if (neighbor_count == 0) throw std::invalid_argument("ts_keygen: node has no neighbors");
  const std::size_t k = std::min(f, neighbor_count - 1);
  const std::size_t honest = neighbor_count - k;
  return (key_len_bits + honest - 1) / honest;
}

std::uint64_t ts_pa_seed(std::uint64_t base, NodeId owner, std::uint64_t view, unsigned step) noexcept {
  return derive_seed(base, {0x7473ULL, view, step, owner});
}

TsKey ts_keygen(NodeId owner, std::uint64_t view, unsigned step, std::span<const KeyBlock> neighbor_blocks,
                std::size_t f, const SecurityParams& params, std::uint64_t pa_seed) {
  const std::size_t share = ts_share_bits(neighbor_blocks.size(), f, params.ts_key_len_bits);
  std::vector<std::pair<NodeId, const KeyBlock*>> ordered;
  for (const auto& b : neighbor_blocks) {
    if (!b.edge.touches(owner)) throw std::invalid_argument("ts_keygen: block from a link not incident to owner");
    if (b.length_bits != share || b.material.size() != share)
      throw std::invalid_argument("ts_keygen: share length differs from ceil(L / (x - k))");
    ordered.emplace_back(b.edge.other(owner), &b);
  }
  std::sort(ordered.begin(), ordered.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
  for (std::size_t i = 1; i < ordered.size(); ++i)
    if (ordered[i].first == ordered[i - 1].first) throw std::invalid_argument("ts_keygen: two blocks from one link");

  BitString raw;
  for (const auto& [nb, block] : ordered) raw.append(block->material);
  return TsKey{owner, view, step, privacy_amplify(raw, params.ts_key_len_bits, pa_seed), false};
}

std::size_t ts_key_draw_bits(std::size_t degree, std::size_t f, const SecurityParams& params) {
  return degree * ts_share_bits(degree, f, params.ts_key_len_bits);
}

TsKey draw_ts_key(Keystore& keys, const Graph& g, NodeId owner, std::uint64_t view, unsigned step, std::size_t f,
                  const SecurityParams& params, std::uint64_t pa_seed_base) {
  const auto& nbrs = g.neighbors(owner);
  const std::size_t share = ts_share_bits(nbrs.size(), f, params.ts_key_len_bits);
  for (NodeId nb : nbrs) {
    const Edge e(owner, nb);
    if (keys.available(e) < share) throw InsufficientKey(e, share, keys.available(e));
  }
  std::vector<KeyBlock> blocks;
  blocks.reserve(nbrs.size());
  for (NodeId nb : nbrs) blocks.push_back(keys.consume(Edge(owner, nb), share, KeyPurpose::Consensus));
  return ts_keygen(owner, view, step, blocks, f, params, ts_pa_seed(pa_seed_base, owner, view, step));
}

TemporarySignature ts_sign(const TsKey& key, std::span<const std::uint8_t> message, Tick now,
                           const SecurityParams& params) {
  if (key.disclosed) throw std::logic_error("ts_sign: key already disclosed");
  return {auth_tag(key.material, message, params).tag, key.owner, now, key.ref()};
}

TsVerdict ts_verify(const TemporarySignature& sig, std::span<const std::uint8_t> message, const TsKey& disclosed_key,
                    const Graph& disclosure_graph, NodeId verifier, std::size_t f, Tick received_at, Tick validity,
                    const SecurityParams& params) {
  if (received_at - sig.signed_at > validity) return {TsReject::Expired};
  if (!disclosed_key.disclosed || disclosed_key.owner != sig.signer || disclosed_key.ref() != sig.key_ref)
    return {TsReject::BadTag};
  if (disclosed_key.material.size() < params.auth_key_bits()) return {TsReject::BadTag};
  if (auth_tag(disclosed_key.material, message, params).tag != sig.tag) return {TsReject::BadTag};
  if (sig.signer != verifier && max_disjoint_paths(disclosure_graph, sig.signer, verifier).size() < f + 1)
    return {TsReject::InsufficientPaths};
  return {};
}

}  // namespace itsbft
