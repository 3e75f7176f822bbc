#pragma once

#include <cstdint>

#include "zkwm/field.hpp"

namespace zkwm {

/// Signed binary fixed-point format: W-bit two's-complement raw values
/// interpreted as raw / 2^f. The width constraint keeps unrescaled inner
/// products of dimension n well below the field modulus.
struct FixedPointFormat {
  uint32_t frac_bits = 16;   // f
  uint32_t total_bits = 48;  // W

  bool operator==(const FixedPointFormat&) const = default;

  int64_t min_raw() const { return -(int64_t(1) << (total_bits - 1)); }
  int64_t max_raw() const { return (int64_t(1) << (total_bits - 1)) - 1; }
  bool raw_in_range(__int128 raw) const {
    return raw >= min_raw() && raw <= max_raw();
  }
  // W + f + ceil(log2(n)) + 2 < 254
  bool supports_inner_dim(uint64_t n) const;
  double resolution() const;  // 2^-f
};

struct FixedPointValue {
  int64_t raw = 0;
  FixedPointFormat format;
};

/// Round half away from zero. Throws OutOfRangeError when |x| >= 2^(W-1-f).
FixedPointValue fxp_encode(double x, FixedPointFormat fmt);

/// Exact: raw / 2^f (exact in double for W <= 53).
double fxp_decode(FixedPointValue v);

/// Exact addition; throws OverflowError when the result leaves the W-bit range.
FixedPointValue fxp_add(FixedPointValue a, FixedPointValue b);

/// floor((a.raw * b.raw) / 2^f) with floor toward negative infinity.
FixedPointValue fxp_mul_rescale(FixedPointValue a, FixedPointValue b);

/// Floor division by 2^s, rounding toward negative infinity.
inline __int128 floor_div_pow2(__int128 x, uint32_t s) {
  return x >> s;  // arithmetic shift on signed types
}

/// Truncate a wide accumulator (2f fractional bits) back to f fractional
/// bits. Throws OverflowError if the result leaves the W-bit range.
FixedPointValue fxp_rescale_wide(__int128 wide, FixedPointFormat fmt);

FieldScalar fxp_to_field(FixedPointValue v);
/// Inverse of fxp_to_field; throws OutOfRangeError if the centered lift of
/// the element does not fit the format.
FixedPointValue fxp_from_field(const FieldScalar& s, FixedPointFormat fmt);

}  // namespace zkwm
