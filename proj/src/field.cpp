#include "zkwm/field.hpp"

#include <cstring>

namespace zkwm {
namespace {

using uint128_t = unsigned __int128;

// BN254 scalar field modulus
// p = 21888242871839275222246405745257275088548364400416034343698204186575808495617
constexpr FieldScalar::Limbs kModulus = {
    0x43e1f593f0000001ull, 0x2833e84879b97091ull,
    0xb85045b68181585dull, 0x30644e72e131a029ull};

// R^2 mod p with R = 2^256
constexpr FieldScalar::Limbs kR2 = {
    0x1bb8e645ae216da7ull, 0x53fe3ab1e35c59e3ull,
    0x8c49833d53bb8085ull, 0x0216d0b17f4e44a5ull};

// R mod p (Montgomery form of 1)
constexpr FieldScalar::Limbs kRModP = {
    0xac96341c4ffffffbull, 0x36fc76959f60cd29ull,
    0x666ea36f7879462eull, 0x0e0a77c19a07df2full};

// -p^{-1} mod 2^64
constexpr uint64_t kNegInv = 0xc2e1f593efffffffull;

// (p-1)/2, canonical limbs
constexpr FieldScalar::Limbs kHalfP = {
    0xa1f0fac9f8000000ull, 0x9419f4243cdcb848ull,
    0xdc2822db40c0ac2eull, 0x183227397098d014ull};

inline uint64_t adc(uint64_t a, uint64_t b, uint64_t& carry) {
  uint128_t r = (uint128_t)a + b + carry;
  carry = (uint64_t)(r >> 64);
  return (uint64_t)r;
}

inline uint64_t sbb(uint64_t a, uint64_t b, uint64_t& borrow) {
  uint128_t r = (uint128_t)a - b - borrow;
  borrow = (uint64_t)(r >> 64) & 1;
  return (uint64_t)r;
}

inline uint64_t mac(uint64_t a, uint64_t b, uint64_t c, uint64_t& carry) {
  uint128_t r = (uint128_t)b * c + a + carry;
  carry = (uint64_t)(r >> 64);
  return (uint64_t)r;
}

inline bool gte(const FieldScalar::Limbs& a, const FieldScalar::Limbs& b) {
  for (int i = 3; i >= 0; --i) {
    if (a[i] != b[i]) return a[i] > b[i];
  }
  return true;
}

inline void cond_sub_p(FieldScalar::Limbs& a, bool must) {
  if (must || gte(a, kModulus)) {
    uint64_t borrow = 0;
    for (int i = 0; i < 4; ++i) a[i] = sbb(a[i], kModulus[i], borrow);
  }
}

// CIOS Montgomery multiplication, 4x64 limbs.
FieldScalar::Limbs mont_mul(const FieldScalar::Limbs& a,
                            const FieldScalar::Limbs& b) {
  uint64_t t[6] = {0, 0, 0, 0, 0, 0};
  for (int i = 0; i < 4; ++i) {
    uint64_t carry = 0;
    for (int j = 0; j < 4; ++j) t[j] = mac(t[j], a[j], b[i], carry);
    t[4] = adc(t[4], 0, carry);
    t[5] = carry;

    uint64_t m = t[0] * kNegInv;
    carry = 0;
    (void)mac(t[0], m, kModulus[0], carry);
    for (int j = 1; j < 4; ++j) t[j - 1] = mac(t[j], m, kModulus[j], carry);
    t[3] = adc(t[4], 0, carry);
    t[4] = t[5] + carry;
    t[5] = 0;
  }
  FieldScalar::Limbs r = {t[0], t[1], t[2], t[3]};
  cond_sub_p(r, t[4] != 0);
  return r;
}

FieldScalar::Limbs add_mod(const FieldScalar::Limbs& a,
                           const FieldScalar::Limbs& b) {
  FieldScalar::Limbs r;
  uint64_t carry = 0;
  for (int i = 0; i < 4; ++i) r[i] = adc(a[i], b[i], carry);
  // a, b < p < 2^254, so the sum fits in 256 bits and carry is always 0
  cond_sub_p(r, false);
  return r;
}

FieldScalar::Limbs sub_mod(const FieldScalar::Limbs& a,
                           const FieldScalar::Limbs& b) {
  FieldScalar::Limbs r;
  uint64_t borrow = 0;
  for (int i = 0; i < 4; ++i) r[i] = sbb(a[i], b[i], borrow);
  if (borrow) {
    uint64_t carry = 0;
    for (int i = 0; i < 4; ++i) r[i] = adc(r[i], kModulus[i], carry);
  }
  return r;
}

inline bool is_zero_limbs(const FieldScalar::Limbs& a) {
  return (a[0] | a[1] | a[2] | a[3]) == 0;
}

int hex_digit(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

}  // namespace

FieldScalar FieldScalar::one() { return from_montgomery_limbs(kRModP); }

const FieldScalar::Limbs& FieldScalar::modulus() { return kModulus; }

FieldScalar FieldScalar::from_montgomery_limbs(const Limbs& l) {
  FieldScalar s;
  s.mont_ = l;
  return s;
}

FieldScalar FieldScalar::from_uint64(uint64_t v) {
  return from_montgomery_limbs(mont_mul({v, 0, 0, 0}, kR2));
}

FieldScalar FieldScalar::from_int64(int64_t v) {
  if (v >= 0) return from_uint64((uint64_t)v);
  uint64_t mag = (uint64_t)(-(v + 1)) + 1;  // |v| without overflow at INT64_MIN
  return from_uint64(mag).neg();
}

FieldScalar FieldScalar::from_int128(__int128 v) {
  bool negative = v < 0;
  uint128_t mag = negative ? (uint128_t)(-(v + 1)) + 1 : (uint128_t)v;
  Limbs raw = {(uint64_t)mag, (uint64_t)(mag >> 64), 0, 0};
  FieldScalar s = from_montgomery_limbs(mont_mul(raw, kR2));
  return negative ? s.neg() : s;
}

std::optional<FieldScalar> FieldScalar::from_canonical_bytes(
    const uint8_t bytes[32]) {
  Limbs raw;
  for (int i = 0; i < 4; ++i) {
    uint64_t l = 0;
    for (int j = 7; j >= 0; --j) l = (l << 8) | bytes[i * 8 + j];
    raw[i] = l;
  }
  if (gte(raw, kModulus)) return std::nullopt;
  return from_montgomery_limbs(mont_mul(raw, kR2));
}

std::optional<FieldScalar> FieldScalar::from_hex(std::string_view hex) {
  if (hex.size() >= 2 && hex[0] == '0' && (hex[1] == 'x' || hex[1] == 'X'))
    hex = hex.substr(2);
  if (hex.empty() || hex.size() > 64) return std::nullopt;
  Limbs raw = {0, 0, 0, 0};
  for (char c : hex) {
    int d = hex_digit(c);
    if (d < 0) return std::nullopt;
    // raw = raw*16 + d
    uint64_t carry = (uint64_t)d;
    for (int i = 0; i < 4; ++i) {
      uint128_t r = ((uint128_t)raw[i] << 4) | carry;
      raw[i] = (uint64_t)r;
      carry = (uint64_t)(r >> 64);
    }
    if (carry) return std::nullopt;
  }
  if (gte(raw, kModulus)) return std::nullopt;
  return from_montgomery_limbs(mont_mul(raw, kR2));
}

void FieldScalar::to_canonical_bytes(uint8_t out[32]) const {
  Limbs canon = mont_mul(mont_, {1, 0, 0, 0});
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 8; ++j) out[i * 8 + j] = (uint8_t)(canon[i] >> (8 * j));
}

std::string FieldScalar::to_hex() const {
  uint8_t bytes[32];
  to_canonical_bytes(bytes);
  static const char* digits = "0123456789abcdef";
  std::string s = "0x";
  for (int i = 31; i >= 0; --i) {
    s += digits[bytes[i] >> 4];
    s += digits[bytes[i] & 0xf];
  }
  return s;
}

FieldScalar FieldScalar::operator+(const FieldScalar& o) const {
  return from_montgomery_limbs(add_mod(mont_, o.mont_));
}

FieldScalar FieldScalar::operator-(const FieldScalar& o) const {
  return from_montgomery_limbs(sub_mod(mont_, o.mont_));
}

FieldScalar FieldScalar::operator*(const FieldScalar& o) const {
  return from_montgomery_limbs(mont_mul(mont_, o.mont_));
}

FieldScalar FieldScalar::neg() const {
  if (is_zero()) return *this;
  return from_montgomery_limbs(sub_mod({0, 0, 0, 0}, mont_));
}

FieldScalar FieldScalar::pow(const Limbs& exponent) const {
  FieldScalar acc = one();
  for (int limb = 3; limb >= 0; --limb) {
    for (int bit = 63; bit >= 0; --bit) {
      acc = acc.square();
      if ((exponent[limb] >> bit) & 1) acc = acc * *this;
    }
  }
  return acc;
}

std::optional<FieldScalar> FieldScalar::inverse() const {
  if (is_zero()) return std::nullopt;
  Limbs e = kModulus;  // p - 2
  e[0] -= 2;           // low limb ends in ...0001, no borrow
  return pow(e);
}

bool FieldScalar::is_zero() const { return is_zero_limbs(mont_); }

bool FieldScalar::operator==(const FieldScalar& o) const {
  return mont_ == o.mont_;
}

std::optional<int64_t> FieldScalar::to_int64_centered() const {
  auto wide = to_int128_centered();
  if (!wide) return std::nullopt;
  if (*wide > INT64_MAX || *wide < INT64_MIN) return std::nullopt;
  return (int64_t)*wide;
}

FieldScalar field_pow2(uint32_t k) {
  constexpr uint32_t kCached = 256;
  static const auto table = [] {
    std::array<FieldScalar, kCached> t;
    t[0] = FieldScalar::one();
    FieldScalar two = FieldScalar::from_uint64(2);
    for (uint32_t i = 1; i < kCached; ++i) t[i] = t[i - 1] * two;
    return t;
  }();
  if (k < kCached) return table[k];
  FieldScalar r = table[kCached - 1];
  for (uint32_t i = kCached - 1; i < k; ++i) r = r * FieldScalar::from_uint64(2);
  return r;
}

std::optional<__int128> FieldScalar::to_int128_centered() const {
  Limbs canon = mont_mul(mont_, {1, 0, 0, 0});
  if (gte(kHalfP, canon)) {  // canon <= (p-1)/2 -> nonnegative
    if (canon[2] | canon[3]) return std::nullopt;
    uint128_t mag = ((uint128_t)canon[1] << 64) | canon[0];
    if (mag > (uint128_t)1 << 126) return std::nullopt;
    return (__int128)mag;
  }
  Limbs mag4;
  uint64_t borrow = 0;
  for (int i = 0; i < 4; ++i) mag4[i] = sbb(kModulus[i], canon[i], borrow);
  if (mag4[2] | mag4[3]) return std::nullopt;
  uint128_t mag = ((uint128_t)mag4[1] << 64) | mag4[0];
  if (mag > (uint128_t)1 << 126) return std::nullopt;
  return -(__int128)mag;
}

}  // namespace zkwm
