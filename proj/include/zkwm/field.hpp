#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>

namespace zkwm {

/// Element of the scalar field of the BN254 pairing curve (254-bit prime,
/// ~128-bit security). Stored in Montgomery form; the canonical value is the
/// unique integer in [0, p).
class FieldScalar {
 public:
  using Limbs = std::array<uint64_t, 4>;

  constexpr FieldScalar() : mont_{0, 0, 0, 0} {}

  static FieldScalar zero() { return FieldScalar(); }
  static FieldScalar one();
  static FieldScalar from_uint64(uint64_t v);
  static FieldScalar from_int64(int64_t v);  // negative v maps to p - |v|
  static FieldScalar from_int128(__int128 v);
  static std::optional<FieldScalar> from_canonical_bytes(const uint8_t bytes[32]);
  static std::optional<FieldScalar> from_hex(std::string_view hex);

  // Little-endian canonical (non-Montgomery) encoding, exactly 32 bytes.
  void to_canonical_bytes(uint8_t out[32]) const;
  std::string to_hex() const;  // 0x + 64 lowercase digits, big-endian

  FieldScalar operator+(const FieldScalar& o) const;
  FieldScalar operator-(const FieldScalar& o) const;
  FieldScalar operator*(const FieldScalar& o) const;
  FieldScalar& operator+=(const FieldScalar& o) { return *this = *this + o; }
  FieldScalar& operator-=(const FieldScalar& o) { return *this = *this - o; }
  FieldScalar& operator*=(const FieldScalar& o) { return *this = *this * o; }
  FieldScalar neg() const;
  FieldScalar square() const { return *this * *this; }
  FieldScalar pow(const Limbs& exponent) const;
  std::optional<FieldScalar> inverse() const;  // nullopt for zero

  bool is_zero() const;
  bool operator==(const FieldScalar& o) const;
  bool operator!=(const FieldScalar& o) const { return !(*this == o); }

  // Centered lift: canonical values <= (p-1)/2 are nonnegative, the rest map
  // to value - p. nullopt when the lift does not fit the target width.
  std::optional<int64_t> to_int64_centered() const;
  std::optional<__int128> to_int128_centered() const;

  const Limbs& montgomery_limbs() const { return mont_; }
  static FieldScalar from_montgomery_limbs(const Limbs& l);

  static const Limbs& modulus();

 private:
  Limbs mont_;
};

/// 2^k as a field element, cached for k up to the widths rescale needs.
FieldScalar field_pow2(uint32_t k);

}  // namespace zkwm
