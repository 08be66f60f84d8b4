#include "itsbft/bits.hpp"

#include <bit>
#include <stdexcept>

namespace itsbft {

namespace {

constexpr std::uint64_t kTop = std::uint64_t{1} << 63;

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

}  // namespace

BitString::BitString(std::size_t nbits) : nbits_(nbits), words_(words_for(nbits), 0) {}

BitString BitString::from_bytes(std::span<const std::uint8_t> bytes, std::size_t nbits) {
  if (nbits > bytes.size() * 8) throw std::invalid_argument("BitString: not enough bytes");
  BitString out(nbits);
  for (std::size_t i = 0; i < (nbits + 7) / 8; ++i) {
    out.words_[i / 8] |= std::uint64_t{bytes[i]} << (56 - 8 * (i % 8));
  }
  out.clear_tail();
  return out;
}

BitString BitString::from_hex(std::string_view hex) {
  BitString out(hex.size() * 4);
  for (std::size_t i = 0; i < hex.size(); ++i) {
    const int v = hex_value(hex[i]);
    if (v < 0) throw std::invalid_argument("BitString: bad hex digit");
    for (int b = 0; b < 4; ++b) out.set(4 * i + b, (v >> (3 - b)) & 1);
  }
  return out;
}

BitString BitString::from_binary(std::string_view bits) {
  BitString out(bits.size());
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (bits[i] != '0' && bits[i] != '1') throw std::invalid_argument("BitString: bad binary digit");
    out.set(i, bits[i] == '1');
  }
  return out;
}

BitString BitString::from_u64(std::uint64_t value, std::size_t nbits) {
  if (nbits > 64) throw std::invalid_argument("BitString::from_u64: more than 64 bits");
  BitString out(nbits);
  if (nbits > 0) out.words_[0] = value << (64 - nbits);
  return out;
}

bool BitString::bit(std::size_t i) const {
  if (i >= nbits_) throw std::out_of_range("BitString::bit");
  return (words_[i / 64] >> (63 - i % 64)) & 1;
}

void BitString::set(std::size_t i, bool value) {
  if (i >= nbits_) throw std::out_of_range("BitString::set");
  const std::uint64_t mask = kTop >> (i % 64);
  if (value)
    words_[i / 64] |= mask;
  else
    words_[i / 64] &= ~mask;
}

void BitString::flip(std::size_t i) {
  if (i >= nbits_) throw std::out_of_range("BitString::flip");
  words_[i / 64] ^= kTop >> (i % 64);
}

std::uint64_t BitString::read_u64(std::size_t offset, std::size_t len) const {
  if (len > 64 || offset + len > nbits_) throw std::out_of_range("BitString::read_u64");
  if (len == 0) return 0;
  const std::size_t w = offset / 64, s = offset % 64;
  std::uint64_t v = words_[w] << s;
  if (s != 0 && w + 1 < words_.size()) v |= words_[w + 1] >> (64 - s);
  return v >> (64 - len);
}

BitString BitString::slice(std::size_t offset, std::size_t len) const {
  if (offset + len > nbits_) throw std::out_of_range("BitString::slice");
  BitString out(len);
  const std::size_t w = offset / 64, s = offset % 64;
  for (std::size_t i = 0; i < out.words_.size(); ++i) {
    std::uint64_t v = words_[w + i] << s;
    if (s != 0 && w + i + 1 < words_.size()) v |= words_[w + i + 1] >> (64 - s);
    out.words_[i] = v;
  }
  out.clear_tail();
  return out;
}

void BitString::append(const BitString& tail) {
  const std::size_t old = nbits_;
  nbits_ += tail.nbits_;
  words_.resize(words_for(nbits_), 0);
  const std::size_t w = old / 64, s = old % 64;
  for (std::size_t i = 0; i < tail.words_.size(); ++i) {
    const std::uint64_t v = tail.words_[i];
    words_[w + i] |= v >> s;
    if (s != 0 && w + i + 1 < words_.size()) words_[w + i + 1] |= v << (64 - s);
  }
  clear_tail();
}

BitString& BitString::operator^=(const BitString& other) {
  if (other.nbits_ != nbits_) throw std::invalid_argument("BitString xor: length mismatch");
  for (std::size_t i = 0; i < words_.size(); ++i) words_[i] ^= other.words_[i];
  return *this;
}

bool BitString::is_zero() const noexcept {
  for (auto w : words_)
    if (w != 0) return false;
  return true;
}

std::size_t BitString::popcount() const noexcept {
  std::size_t n = 0;
  for (auto w : words_) n += static_cast<std::size_t>(std::popcount(w));
  return n;
}

std::vector<std::uint8_t> BitString::to_bytes() const {
  std::vector<std::uint8_t> out((nbits_ + 7) / 8);
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = static_cast<std::uint8_t>(words_[i / 8] >> (56 - 8 * (i % 8)));
  return out;
}

std::string BitString::to_hex() const {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  for (std::size_t i = 0; i < nbits_; i += 4) {
    int v = 0;
    for (std::size_t b = 0; b < 4; ++b) v = (v << 1) | ((i + b < nbits_ && bit(i + b)) ? 1 : 0);
    out.push_back(kDigits[v]);
  }
  return out;
}

std::string BitString::to_binary() const {
  std::string out(nbits_, '0');
  for (std::size_t i = 0; i < nbits_; ++i)
    if (bit(i)) out[i] = '1';
  return out;
}

void BitString::clear_tail() noexcept {
  if (nbits_ % 64 != 0 && !words_.empty()) words_.back() &= ~std::uint64_t{0} << (64 - nbits_ % 64);
}

std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> parts) noexcept {
  std::uint64_t h = splitmix64(base);
  for (auto p : parts) h = splitmix64(h ^ splitmix64(p + 0x632be59bd9b4e019ULL));
  return h;
}

BitString stream_bits(std::uint64_t seed, std::size_t offset, std::size_t len) {
  // Word w of the stream is splitmix64(seed ^ splitmix64(w)); slices are
  // assembled from the covering words so any offset is addressable.
  const std::size_t first = offset / 64;
  const std::size_t last = (offset + len + 63) / 64;
  BitString cover((last - first) * 64);
  auto words = cover.mutable_words();
  for (std::size_t w = first; w < last; ++w) words[w - first] = splitmix64(seed ^ splitmix64(w));
  return cover.slice(offset % 64, len);
}

}  // namespace itsbft
