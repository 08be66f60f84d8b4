#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "itsbft/bits.hpp"

namespace itsbft {

/// Canonical byte encoding used for everything that is authenticated or
/// digested. Integers are big-endian; byte strings carry a u32 length
/// prefix; bit strings carry a u32 bit-length prefix followed by their
/// MSB-first bytes; lists carry a u32 count. Fields are written in
/// declaration order.
class ByteWriter {
 public:
  ByteWriter& u8(std::uint8_t v) {
    out_.push_back(v);
    return *this;
  }
  ByteWriter& u32(std::uint32_t v) {
    for (int s = 24; s >= 0; s -= 8) out_.push_back(static_cast<std::uint8_t>(v >> s));
    return *this;
  }
  ByteWriter& u64(std::uint64_t v) {
    for (int s = 56; s >= 0; s -= 8) out_.push_back(static_cast<std::uint8_t>(v >> s));
    return *this;
  }
  ByteWriter& boolean(bool v) { return u8(v ? 1 : 0); }
  ByteWriter& bytes(std::span<const std::uint8_t> b) {
    u32(static_cast<std::uint32_t>(b.size()));
    out_.insert(out_.end(), b.begin(), b.end());
    return *this;
  }
  ByteWriter& text(std::string_view s) {
    u32(static_cast<std::uint32_t>(s.size()));
    out_.insert(out_.end(), s.begin(), s.end());
    return *this;
  }
  ByteWriter& bits(const BitString& b) {
    u32(static_cast<std::uint32_t>(b.size()));
    const auto raw = b.to_bytes();
    out_.insert(out_.end(), raw.begin(), raw.end());
    return *this;
  }
  ByteWriter& count(std::size_t n) { return u32(static_cast<std::uint32_t>(n)); }

  const std::vector<std::uint8_t>& data() const noexcept { return out_; }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

}  // namespace itsbft
