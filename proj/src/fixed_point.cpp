#include "zkwm/fixed_point.hpp"

#include <cmath>

#include "zkwm/errors.hpp"

namespace zkwm {

bool FixedPointFormat::supports_inner_dim(uint64_t n) const {
  uint32_t log2n = 0;
  while ((uint64_t(1) << log2n) < n) ++log2n;
  return total_bits + frac_bits + log2n + 2 < 254;
}

double FixedPointFormat::resolution() const { return std::exp2(-(double)frac_bits); }

FixedPointValue fxp_encode(double x, FixedPointFormat fmt) {
  if (!std::isfinite(x)) throw OutOfRangeError("fxp_encode: non-finite input");
  // x * 2^f is exact in double arithmetic; llround is half-away-from-zero.
  double scaled = x * std::exp2((double)fmt.frac_bits);
  if (std::abs(scaled) >= std::exp2((double)(fmt.total_bits - 1)))
    throw OutOfRangeError("fxp_encode: value outside representable range");
  int64_t raw = std::llround(scaled);
  if (!fmt.raw_in_range(raw))
    throw OutOfRangeError("fxp_encode: value outside representable range");
  return {raw, fmt};
}

double fxp_decode(FixedPointValue v) {
  return (double)v.raw * std::exp2(-(double)v.format.frac_bits);
}

FixedPointValue fxp_add(FixedPointValue a, FixedPointValue b) {
  if (a.format != b.format) throw ShapeMismatchError("fxp_add: format mismatch");
  __int128 sum = (__int128)a.raw + b.raw;
  if (!a.format.raw_in_range(sum)) throw OverflowError("fxp_add: overflow");
  return {(int64_t)sum, a.format};
}

FixedPointValue fxp_mul_rescale(FixedPointValue a, FixedPointValue b) {
  if (a.format != b.format)
    throw ShapeMismatchError("fxp_mul_rescale: format mismatch");
  return fxp_rescale_wide((__int128)a.raw * b.raw, a.format);
}

FixedPointValue fxp_rescale_wide(__int128 wide, FixedPointFormat fmt) {
  __int128 q = floor_div_pow2(wide, fmt.frac_bits);
  if (!fmt.raw_in_range(q)) throw OverflowError("fxp_rescale_wide: overflow");
  return {(int64_t)q, fmt};
}

FieldScalar fxp_to_field(FixedPointValue v) {
  return FieldScalar::from_int64(v.raw);
}

FixedPointValue fxp_from_field(const FieldScalar& s, FixedPointFormat fmt) {
  auto raw = s.to_int64_centered();
  if (!raw || !fmt.raw_in_range(*raw))
    throw OutOfRangeError("fxp_from_field: element outside fixed-point range");
  return {*raw, fmt};
}

}  // namespace zkwm
