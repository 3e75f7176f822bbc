#include "zkwm/gadgets.hpp"

#include <cmath>

#include "zkwm/errors.hpp"
#include "zkwm/fxp_extract.hpp"

namespace zkwm::gadgets {
namespace {

LinearCombination lc_one(const FieldScalar& c) {
  return LinearCombination::constant(c);
}

uint32_t ceil_log2(uint64_t n) {
  uint32_t k = 0;
  while ((uint64_t(1) << k) < n) ++k;
  return k;
}

__int128 lc_int_value(const CircuitBuilder& b, const LinearCombination& lc) {
  auto v = b.eval(lc).to_int128_centered();
  if (!v) throw OverflowError("witness value outside 128-bit lift");
  return *v;
}

}  // namespace

BitVar alloc_bit(CircuitBuilder& b, bool value) {
  Variable v = b.alloc_private(value ? FieldScalar::one() : FieldScalar::zero());
  LinearCombination one_minus = lc_one(FieldScalar::one()) - LinearCombination(v);
  b.enforce(v, one_minus, LinearCombination());
  return {v};
}

std::vector<BitVar> range_check_signed(CircuitBuilder& b,
                                       const LinearCombination& x,
                                       uint32_t bits) {
  LinearCombination shifted = x + lc_one(field_pow2(bits - 1));
  return range_check_unsigned(b, shifted, bits);
}

std::vector<BitVar> range_check_unsigned(CircuitBuilder& b,
                                         const LinearCombination& x,
                                         uint32_t bits) {
  Scope scope(b, "range");
  unsigned __int128 value = 0;
  if (b.witness_mode()) {
    __int128 v = lc_int_value(b, x);
    // Out-of-range witnesses keep their low bits; the sum constraint then
    // has no satisfying assignment, which is the intended failure mode.
    value = (unsigned __int128)v;
  }
  std::vector<BitVar> out;
  out.reserve(bits);
  LinearCombination sum;
  for (uint32_t i = 0; i < bits; ++i) {
    bool bit = b.witness_mode() && ((value >> i) & 1);
    Variable v = b.alloc_private(bit ? FieldScalar::one() : FieldScalar::zero());
    b.enforce(v, lc_one(FieldScalar::one()) - LinearCombination(v),
              LinearCombination());
    sum.add_term(v, field_pow2(i));
    out.push_back({v});
  }
  b.enforce(sum, lc_one(FieldScalar::one()), x);
  return out;
}

BitVar is_nonneg(CircuitBuilder& b, const LinearCombination& x, uint32_t bits) {
  return range_check_signed(b, x, bits).back();
}

uint32_t product_sum_bits(FixedPointFormat fmt, uint64_t n) {
  // |sum of n products| <= n * 2^(2W-2); +1 guards the bound strictness.
  return 2 * fmt.total_bits - 2 + ceil_log2(n) + 1;
}

FxpVar rescale(CircuitBuilder& b, const LinearCombination& wide,
               FixedPointFormat fmt, uint32_t wide_bits) {
  Scope scope(b, "rescale");
  const uint32_t f = fmt.frac_bits;
  Variable result = b.alloc_hint([&] {
    __int128 v = lc_int_value(b, wide);
    return FieldScalar::from_int128(floor_div_pow2(v, f));
  });
  Variable rem = b.alloc_hint([&] {
    __int128 v = lc_int_value(b, wide);
    return FieldScalar::from_int128(v - (floor_div_pow2(v, f) << f));
  });
  // wide + OFFSET = q*2^f + r with q = result + OFFSET/2^f.
  FieldScalar offset = field_pow2(wide_bits);
  LinearCombination lhs = wide + lc_one(offset);
  LinearCombination rhs;
  rhs.add_term(result, field_pow2(f));
  rhs += lc_one(offset);
  rhs.add_term(rem, FieldScalar::one());
  b.enforce(lhs, lc_one(FieldScalar::one()), rhs);
  range_check_unsigned(b, LinearCombination(rem), f);
  range_check_signed(b, LinearCombination(result), fmt.total_bits);
  return {result, fmt};
}

Variable mul_wide(CircuitBuilder& b, const FxpVar& x, const FxpVar& y) {
  Variable w = b.alloc_hint([&] { return b.value(x.var) * b.value(y.var); });
  b.enforce(x.var, y.var, w);
  return w;
}

FxpVar inner_product(CircuitBuilder& b, std::span<const FxpVar> a,
                     std::span<const FxpVar> x,
                     const std::optional<FxpVar>& bias) {
  if (a.size() != x.size() || a.empty())
    throw ShapeMismatchError("inner_product: dimension mismatch");
  FixedPointFormat fmt = a[0].fmt;
  if (!fmt.supports_inner_dim(a.size()))
    throw ShapeMismatchError("inner_product: dimension exceeds format bound");
  LinearCombination wide;
  for (size_t k = 0; k < a.size(); ++k)
    wide.add_term(mul_wide(b, a[k], x[k]), FieldScalar::one());
  if (bias) wide.add_term(bias->var, field_pow2(fmt.frac_bits));
  return rescale(b, wide, fmt, product_sum_bits(fmt, a.size() + 1));
}

FxpMatrix matmul(CircuitBuilder& b, const FxpMatrix& A, const FxpMatrix& B) {
  if (A.cols != B.rows) throw ShapeMismatchError("matmul: inner dimensions");
  Scope scope(b, "matmul");
  FxpMatrix C;
  C.rows = A.rows;
  C.cols = B.cols;
  C.vars.reserve((size_t)A.rows * B.cols);
  std::vector<FxpVar> column(A.cols, FxpVar{});
  for (uint32_t i = 0; i < A.rows; ++i) {
    for (uint32_t j = 0; j < B.cols; ++j) {
      for (uint32_t k = 0; k < A.cols; ++k) column[k] = B.at(k, j);
      std::span<const FxpVar> row(&A.vars[(size_t)i * A.cols], A.cols);
      C.vars.push_back(inner_product(b, row, column));
    }
  }
  return C;
}

FxpTensor3 conv3d(CircuitBuilder& b, const FxpTensor3& input,
                  std::span<const FxpVar> kernels, uint32_t out_channels,
                  uint32_t kernel, uint32_t stride,
                  std::span<const FxpVar> bias) {
  if (kernel == 0 || stride == 0 || out_channels == 0)
    throw ShapeMismatchError("conv3d: degenerate parameters");
  if (kernel > input.h || kernel > input.w)
    throw ShapeMismatchError("conv3d: kernel larger than input");
  const size_t patch = (size_t)kernel * kernel * input.c;
  if (kernels.size() != patch * out_channels)
    throw ShapeMismatchError("conv3d: kernel tensor size");
  if (!bias.empty() && bias.size() != out_channels)
    throw ShapeMismatchError("conv3d: bias size");
  Scope scope(b, "conv3d");

  const uint32_t oh = (input.h - kernel) / stride + 1;
  const uint32_t ow = (input.w - kernel) / stride + 1;
  FxpTensor3 out;
  out.h = oh;
  out.w = ow;
  out.c = out_channels;
  out.vars.reserve((size_t)oh * ow * out_channels);

  std::vector<FxpVar> patch_vars(patch, FxpVar{});
  for (uint32_t i = 0; i < oh; ++i) {
    for (uint32_t j = 0; j < ow; ++j) {
      // im2col: gather the receptive field into one flat vector.
      size_t t = 0;
      for (uint32_t di = 0; di < kernel; ++di)
        for (uint32_t dj = 0; dj < kernel; ++dj)
          for (uint32_t ch = 0; ch < input.c; ++ch)
            patch_vars[t++] = input.at(i * stride + di, j * stride + dj, ch);
      for (uint32_t k = 0; k < out_channels; ++k) {
        std::span<const FxpVar> kern(&kernels[(size_t)k * patch], patch);
        std::optional<FxpVar> bk;
        if (!bias.empty()) bk = bias[k];
        out.vars.push_back(inner_product(b, patch_vars, kern, bk));
      }
    }
  }
  // reorder from (i,j) x channel stream to (h, w, c) row-major: already is.
  return out;
}

FxpVar relu(CircuitBuilder& b, const FxpVar& x) {
  Scope scope(b, "relu");
  BitVar sign = is_nonneg(b, x.var, x.fmt.total_bits);
  Variable out = b.alloc_hint([&] { return b.value(sign.var) * b.value(x.var); });
  b.enforce(sign.var, x.var, out);
  return {out, x.fmt};
}

BitVar hard_threshold(CircuitBuilder& b, const FxpVar& x, double beta) {
  Scope scope(b, "hard_threshold");
  int64_t beta_raw = fxp_encode(beta, x.fmt).raw;
  LinearCombination shifted =
      LinearCombination(x.var) - lc_one(FieldScalar::from_int64(beta_raw));
  // x - beta spans one bit more than the format width.
  return is_nonneg(b, shifted, x.fmt.total_bits + 1);
}

FxpVar sigmoid(CircuitBuilder& b, const FxpVar& x) {
  Scope scope(b, "sigmoid");
  const FixedPointFormat fmt = x.fmt;
  const fxp::SigmoidCoefficients co = fxp::sigmoid_coefficients(fmt);
  const uint32_t wide_bits = product_sum_bits(fmt, 2);
  const FieldScalar unit = field_pow2(fmt.frac_bits);

  auto mul_plus_const = [&](const FxpVar& u, const FxpVar& v, int64_t c_raw) {
    LinearCombination wide(mul_wide(b, u, v));
    wide += lc_one(FieldScalar::from_int64(c_raw) * unit);
    return rescale(b, wide, fmt, wide_bits);
  };

  FxpVar y = rescale(b, LinearCombination(mul_wide(b, x, x)), fmt, wide_bits);
  // ((((c9*y + c7)*y + c5)*y + c3)*y + c1), constant multiplies folded into
  // linear combinations.
  LinearCombination first;
  first.add_term(y.var, FieldScalar::from_int64(co.c9));
  first += lc_one(FieldScalar::from_int64(co.c7) * unit);
  FxpVar t = rescale(b, first, fmt, wide_bits);
  t = mul_plus_const(t, y, co.c5);
  t = mul_plus_const(t, y, co.c3);
  t = mul_plus_const(t, y, co.c1);
  return mul_plus_const(x, t, co.c_half);
}

std::vector<FxpVar> average(CircuitBuilder& b,
                            std::span<const std::vector<FxpVar>> vectors) {
  if (vectors.empty()) throw ShapeMismatchError("average: empty batch");
  Scope scope(b, "average");
  const size_t k = vectors.size();
  const size_t m = vectors[0].size();
  for (const auto& v : vectors)
    if (v.size() != m) throw ShapeMismatchError("average: ragged batch");
  FixedPointFormat fmt = vectors[0][0].fmt;
  FieldScalar inv_k =
      FieldScalar::from_int64(fxp_encode(1.0 / (double)k, fmt).raw);
  std::vector<FxpVar> out;
  out.reserve(m);
  for (size_t j = 0; j < m; ++j) {
    LinearCombination wide;
    for (size_t i = 0; i < k; ++i) wide.add_term(vectors[i][j].var, inv_k);
    out.push_back(rescale(b, wide, fmt, product_sum_bits(fmt, k)));
  }
  return out;
}

BitVar ber_check(CircuitBuilder& b, std::span<const BitVar> wm,
                 std::span<const BitVar> wm_hat, uint64_t max_mismatches) {
  if (wm.size() != wm_hat.size() || wm.empty())
    throw ShapeMismatchError("ber_check: length mismatch");
  Scope scope(b, "ber_check");
  // mismatch_j = wm_j + hat_j - 2*wm_j*hat_j  (boolean XOR)
  LinearCombination mismatches;
  for (size_t j = 0; j < wm.size(); ++j) {
    Variable p = b.alloc_hint(
        [&] { return b.value(wm[j].var) * b.value(wm_hat[j].var); });
    b.enforce(wm[j].var, wm_hat[j].var, p);
    mismatches += LinearCombination(wm[j].var);
    mismatches += LinearCombination(wm_hat[j].var);
    mismatches.add_term(p, FieldScalar::from_int64(-2));
  }
  LinearCombination slack =
      lc_one(FieldScalar::from_uint64(max_mismatches)) - mismatches;
  // T - sum lies in [T - B, T]; a small signed width covers it.
  uint32_t bits = ceil_log2(wm.size() + max_mismatches + 1) + 2;
  return is_nonneg(b, slack, bits);
}

BitVar and_bits(CircuitBuilder& b, std::span<const BitVar> bits) {
  if (bits.empty()) {
    // Constant-true bit: 1 * (1-1) = 0 on a unit private variable.
    BitVar one_bit = alloc_bit(b, true);
    b.enforce(one_bit.var, lc_one(FieldScalar::one()),
              lc_one(FieldScalar::one()));
    return one_bit;
  }
  BitVar acc = bits[0];
  for (size_t i = 1; i < bits.size(); ++i) {
    Variable p = b.alloc_hint(
        [&] { return b.value(acc.var) * b.value(bits[i].var); });
    b.enforce(acc.var, bits[i].var, p);
    acc = BitVar{p};
  }
  return acc;
}

int64_t raw_value(const CircuitBuilder& b, const FxpVar& v) {
  auto r = b.value(v.var).to_int64_centered();
  if (!r) throw OverflowError("raw_value: outside 64-bit lift");
  return *r;
}

}  // namespace zkwm::gadgets
