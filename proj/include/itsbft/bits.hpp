#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace itsbft {

/// Fixed-length bit string, most-significant-bit first.
///
/// Bit 0 is the first bit of the string. Storage is a vector of 64-bit
/// words where bit i lives in word i/64 at position 63 - i%64, so the
/// big-endian byte image of the words is the canonical byte encoding.
/// Bits past size() are always zero.
class BitString {
 public:
  BitString() = default;
  explicit BitString(std::size_t nbits);

  static BitString from_bytes(std::span<const std::uint8_t> bytes, std::size_t nbits);
  static BitString from_bytes(std::span<const std::uint8_t> bytes) {
    return from_bytes(bytes, bytes.size() * 8);
  }
  /// Hex digits, 4 bits each ("a5" is 10100101).
  static BitString from_hex(std::string_view hex);
  static BitString from_binary(std::string_view bits);
  static BitString from_u64(std::uint64_t value, std::size_t nbits);

  std::size_t size() const noexcept { return nbits_; }
  bool empty() const noexcept { return nbits_ == 0; }

  bool bit(std::size_t i) const;
  void set(std::size_t i, bool value);
  void flip(std::size_t i);

  BitString slice(std::size_t offset, std::size_t len) const;
  void append(const BitString& tail);
  /// Reads up to 64 bits starting at offset, right-aligned in the result.
  std::uint64_t read_u64(std::size_t offset, std::size_t len) const;

  BitString& operator^=(const BitString& other);
  friend BitString operator^(BitString lhs, const BitString& rhs) { return lhs ^= rhs; }
  friend bool operator==(const BitString&, const BitString&) = default;

  bool is_zero() const noexcept;
  std::size_t popcount() const noexcept;

  std::vector<std::uint8_t> to_bytes() const;
  std::string to_hex() const;
  std::string to_binary() const;

  std::span<const std::uint64_t> words() const noexcept { return words_; }
  std::span<std::uint64_t> mutable_words() noexcept { return words_; }
  /// Re-zeroes any bits beyond size() after direct word writes.
  void clear_tail() noexcept;

 private:
  std::size_t nbits_ = 0;
  std::vector<std::uint64_t> words_;
};

inline std::size_t words_for(std::size_t nbits) { return (nbits + 63) / 64; }

std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// Mixes several values into one 64-bit seed; used for every derived seed
/// (per-link streams, PA seeds, per-view seeds) so the derivation is uniform.
std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> parts) noexcept;

/// Random-access pseudorandom bit stream: bits [offset, offset+len) of the
/// infinite stream defined by seed. Identical arguments give identical bits.
BitString stream_bits(std::uint64_t seed, std::size_t offset, std::size_t len);

}  // namespace itsbft
