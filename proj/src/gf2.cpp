#include "itsbft/gf2.hpp"

#include <algorithm>
#include <map>
#include <mutex>
#include <stdexcept>

#if defined(__x86_64__)
#include <immintrin.h>
#endif

namespace itsbft::gf2 {

namespace {

using u128 = unsigned __int128;

Wide clmul_soft(std::uint64_t a, std::uint64_t b) noexcept {
  Wide r;
  for (unsigned i = 0; i < 64; ++i) {
    const std::uint64_t m = std::uint64_t{0} - ((b >> i) & 1);
    r.lo ^= (a << i) & m;
    if (i != 0) r.hi ^= (a >> (64 - i)) & m;
  }
  return r;
}

#if defined(__x86_64__)
__attribute__((target("pclmul,sse2"))) Wide clmul_hw(std::uint64_t a, std::uint64_t b) noexcept {
  const __m128i x = _mm_set_epi64x(0, static_cast<long long>(a));
  const __m128i y = _mm_set_epi64x(0, static_cast<long long>(b));
  const __m128i r = _mm_clmulepi64_si128(x, y, 0);
  return {static_cast<std::uint64_t>(_mm_cvtsi128_si64(r)),
          static_cast<std::uint64_t>(_mm_cvtsi128_si64(_mm_unpackhi_epi64(r, r)))};
}

const bool kHasPclmul = __builtin_cpu_supports("pclmul");
#endif

constexpr std::size_t kSchoolbookWords = 24;

#if defined(__x86_64__)
__attribute__((target("pclmul,sse2"))) void schoolbook_hw(const std::uint64_t* a, const std::uint64_t* b,
                                                         std::size_t n, std::uint64_t* out) {
  for (std::size_t i = 0; i < n; ++i) {
    if (a[i] == 0) continue;
    const __m128i x = _mm_set_epi64x(0, static_cast<long long>(a[i]));
    for (std::size_t j = 0; j < n; ++j) {
      const __m128i r = _mm_clmulepi64_si128(x, _mm_set_epi64x(0, static_cast<long long>(b[j])), 0);
      out[i + j] ^= static_cast<std::uint64_t>(_mm_cvtsi128_si64(r));
      out[i + j + 1] ^= static_cast<std::uint64_t>(_mm_cvtsi128_si64(_mm_unpackhi_epi64(r, r)));
    }
  }
}
#endif

void schoolbook(const std::uint64_t* a, const std::uint64_t* b, std::size_t n, std::uint64_t* out) {
#if defined(__x86_64__)
  if (kHasPclmul) return schoolbook_hw(a, b, n, out);
#endif
  for (std::size_t i = 0; i < n; ++i) {
    if (a[i] == 0) continue;
    for (std::size_t j = 0; j < n; ++j) {
      const Wide p = clmul(a[i], b[j]);
      out[i + j] ^= p.lo;
      out[i + j + 1] ^= p.hi;
    }
  }
}

// out must hold 2n zeroed words.
void karatsuba(const std::uint64_t* a, const std::uint64_t* b, std::size_t n, std::uint64_t* out) {
  if (n <= kSchoolbookWords) {
    schoolbook(a, b, n, out);
    return;
  }
  const std::size_t h = n / 2, k = n - h;
  std::vector<std::uint64_t> z0(2 * h, 0), z2(2 * k, 0), z1(2 * k, 0);
  karatsuba(a, b, h, z0.data());
  karatsuba(a + h, b + h, k, z2.data());
  std::vector<std::uint64_t> as(a + h, a + n), bs(b + h, b + n);
  for (std::size_t i = 0; i < h; ++i) {
    as[i] ^= a[i];
    bs[i] ^= b[i];
  }
  karatsuba(as.data(), bs.data(), k, z1.data());
  for (std::size_t i = 0; i < z0.size(); ++i) z1[i] ^= z0[i];
  for (std::size_t i = 0; i < z2.size(); ++i) z1[i] ^= z2[i];
  for (std::size_t i = 0; i < z0.size(); ++i) out[i] ^= z0[i];
  for (std::size_t i = 0; i < z1.size(); ++i) out[i + h] ^= z1[i];
  for (std::size_t i = 0; i < z2.size(); ++i) out[i + 2 * h] ^= z2[i];
}

int degree_of(u128 p) {
  if (p == 0) return -1;
  const auto hi = static_cast<std::uint64_t>(p >> 64);
  if (hi != 0) return 127 - __builtin_clzll(hi);
  return 63 - __builtin_clzll(static_cast<std::uint64_t>(p));
}

u128 poly_mod(u128 a, u128 m) {
  const int dm = degree_of(m);
  for (int da = degree_of(a); da >= dm; da = degree_of(a)) a ^= m << (da - dm);
  return a;
}

u128 poly_gcd(u128 a, u128 b) {
  while (b != 0) {
    const u128 r = poly_mod(a, b);
    a = b;
    b = r;
  }
  return a;
}

std::uint64_t mul_mod(std::uint64_t a, std::uint64_t b, unsigned degree, std::uint64_t low) noexcept {
  const Wide p = clmul(a, b);
  u128 v = (u128{p.hi} << 64) | p.lo;
  // Fold x^degree * hi into hi * low until nothing is left above degree.
  const u128 mask = (u128{1} << degree) - 1;
  for (u128 hi = v >> degree; hi != 0; hi = v >> degree) {
    const Wide q = clmul(static_cast<std::uint64_t>(hi), low);
    v = (v & mask) ^ ((u128{q.hi} << 64) | q.lo);
  }
  return static_cast<std::uint64_t>(v);
}

std::uint64_t find_irreducible(unsigned degree) {
  if (degree == 1) return 1;
  for (unsigned k = 1; k < degree; ++k) {
    const std::uint64_t low = (std::uint64_t{1} << k) | 1;
    if (is_irreducible(degree, low)) return low;
  }
  for (unsigned a = 3; a < degree; ++a)
    for (unsigned b = 2; b < a; ++b)
      for (unsigned c = 1; c < b; ++c) {
        const std::uint64_t low = (std::uint64_t{1} << a) | (std::uint64_t{1} << b) | (std::uint64_t{1} << c) | 1;
        if (is_irreducible(degree, low)) return low;
      }
  throw std::logic_error("no irreducible trinomial or pentanomial found");
}

}  // namespace

Wide clmul(std::uint64_t a, std::uint64_t b) noexcept {
#if defined(__x86_64__)
  if (kHasPclmul) return clmul_hw(a, b);
#endif
  return clmul_soft(a, b);
}

std::vector<std::uint64_t> poly_mul(std::span<const std::uint64_t> a, std::span<const std::uint64_t> b) {
  const std::size_t n = std::max(a.size(), b.size());
  std::vector<std::uint64_t> out(a.size() + b.size(), 0);
  if (n == 0) return out;
  std::vector<std::uint64_t> pa(a.begin(), a.end()), pb(b.begin(), b.end());
  pa.resize(n, 0);
  pb.resize(n, 0);
  std::vector<std::uint64_t> full(2 * n, 0);
  karatsuba(pa.data(), pb.data(), n, full.data());
  std::copy_n(full.begin(), out.size(), out.begin());
  return out;
}

bool is_irreducible(unsigned degree, std::uint64_t low) {
  if (degree == 0 || degree > 64) throw std::invalid_argument("is_irreducible: degree out of range");
  if (degree == 1) return true;
  if ((low & 1) == 0) return false;  // divisible by x
  const u128 f = (u128{1} << degree) | low;
  std::uint64_t h = 2;  // x
  for (unsigned i = 1; i <= degree / 2; ++i) {
    h = mul_mod(h, h, degree, low);
    if (degree_of(poly_gcd(f, u128{h ^ 2})) != 0) return false;
  }
  return true;
}

std::uint64_t irreducible_low(unsigned degree) {
  if (degree == 0 || degree > 64) throw std::invalid_argument("Field degree must be in [1, 64]");
  static std::mutex mu;
  static std::map<unsigned, std::uint64_t> cache;
  std::lock_guard lock(mu);
  auto it = cache.find(degree);
  if (it == cache.end()) it = cache.emplace(degree, find_irreducible(degree)).first;
  return it->second;
}

Field::Field(unsigned degree)
    : degree_(degree),
      low_(irreducible_low(degree)),
      mask_(degree == 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << degree) - 1) {}

std::uint64_t Field::mul(std::uint64_t a, std::uint64_t b) const noexcept {
  return mul_mod(a & mask_, b & mask_, degree_, low_);
}

}  // namespace itsbft::gf2
