#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace itsbft::gf2 {

/// 64x64 -> 128 carry-less product as {low, high}.
struct Wide {
  std::uint64_t lo = 0;
  std::uint64_t hi = 0;
};
Wide clmul(std::uint64_t a, std::uint64_t b) noexcept;

/// Product of two GF(2)[x] polynomials stored LSB-first (coefficient j at
/// word j/64, bit j%64). Result has a.size() + b.size() words.
std::vector<std::uint64_t> poly_mul(std::span<const std::uint64_t> a, std::span<const std::uint64_t> b);

/// GF(2^degree) for 1 <= degree <= 64, using the lexicographically first
/// irreducible trinomial (else pentanomial) of that degree.
class Field {
 public:
  explicit Field(unsigned degree);

  unsigned degree() const noexcept { return degree_; }
  /// Modulus without the leading x^degree term.
  std::uint64_t modulus_low() const noexcept { return low_; }
  std::uint64_t mask() const noexcept { return mask_; }

  std::uint64_t mul(std::uint64_t a, std::uint64_t b) const noexcept;

 private:
  unsigned degree_;
  std::uint64_t low_;
  std::uint64_t mask_;
};

/// Ben-Or irreducibility test for x^degree + low.
bool is_irreducible(unsigned degree, std::uint64_t low);

/// Cached lookup of the modulus used by Field(degree).
std::uint64_t irreducible_low(unsigned degree);

}  // namespace itsbft::gf2
