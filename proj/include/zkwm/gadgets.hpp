#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "zkwm/fixed_point.hpp"
#include "zkwm/r1cs.hpp"

namespace zkwm::gadgets {

/// Variable carrying a fixed-point raw value embedded in the field via the
/// centered (p/2 midpoint) convention.
struct FxpVar {
  Variable var;
  FixedPointFormat fmt;
};

/// Variable constrained to {0,1} by a booleanity constraint at allocation.
struct BitVar {
  Variable var;
};

/// Private bit input; emits b*(1-b)=0.
BitVar alloc_bit(CircuitBuilder& b, bool value);

/// Offset-binary decomposition: emits `bits` boolean variables b_i with
/// sum(b_i 2^i) = x + 2^(bits-1). Costs bits+1 constraints. A witness outside
/// [-2^(bits-1), 2^(bits-1)) leaves the system unsatisfiable.
std::vector<BitVar> range_check_signed(CircuitBuilder& b,
                                       const LinearCombination& x,
                                       uint32_t bits);

/// Nonnegative decomposition: sum(b_i 2^i) = x, for x in [0, 2^bits).
std::vector<BitVar> range_check_unsigned(CircuitBuilder& b,
                                         const LinearCombination& x,
                                         uint32_t bits);

/// Top bit of the offset decomposition: 1 iff x >= 0. `bits` must cover the
/// signed range of x.
BitVar is_nonneg(CircuitBuilder& b, const LinearCombination& x, uint32_t bits);

/// Truncating rescale of a wide accumulator holding 2f fractional bits.
/// Hints quotient and remainder, enforces
///   wide + OFFSET = q*2^f + r,   OFFSET = 2^wide_bits,
/// with r unsigned-range-checked to f bits and the de-offset quotient
/// signed-range-checked to W bits. Floor toward negative infinity; matches
/// fxp_rescale_wide bit for bit.
FxpVar rescale(CircuitBuilder& b, const LinearCombination& wide,
               FixedPointFormat fmt, uint32_t wide_bits);

/// wide_bits bound for a sum of `n` full-width fixed-point products.
uint32_t product_sum_bits(FixedPointFormat fmt, uint64_t n);

/// One product constraint: returns a hint w with a*b=w (wide, 2f fractional).
Variable mul_wide(CircuitBuilder& b, const FxpVar& x, const FxpVar& y);

/// sum_k a[k]*b[k] (+ bias, scaled to wide) followed by a single rescale.
FxpVar inner_product(CircuitBuilder& b, std::span<const FxpVar> a,
                     std::span<const FxpVar> x,
                     const std::optional<FxpVar>& bias = std::nullopt);

struct FxpMatrix {
  uint32_t rows = 0, cols = 0;
  std::vector<FxpVar> vars;  // row-major
  const FxpVar& at(uint32_t r, uint32_t c) const { return vars[r * cols + c]; }
};

/// C = A x B with one rescale per output entry.
FxpMatrix matmul(CircuitBuilder& b, const FxpMatrix& A, const FxpMatrix& B);

struct FxpTensor3 {
  uint32_t h = 0, w = 0, c = 0;
  std::vector<FxpVar> vars;  // row-major (h, w, c)
  const FxpVar& at(uint32_t i, uint32_t j, uint32_t k) const {
    return vars[(i * w + j) * c + k];
  }
};

/// 2D spatial convolution over a 3D input (im2col regrouping, one inner
/// product per output element). kernels: [K][k][k][C] row-major. No padding;
/// output H' = floor((H-k)/stride)+1.
FxpTensor3 conv3d(CircuitBuilder& b, const FxpTensor3& input,
                  std::span<const FxpVar> kernels, uint32_t out_channels,
                  uint32_t kernel, uint32_t stride,
                  std::span<const FxpVar> bias = {});

/// max(0, x): sign bit times x, one product constraint past the comparison.
FxpVar relu(CircuitBuilder& b, const FxpVar& x);

/// 1 iff x >= beta (beta encoded as a public constant).
BitVar hard_threshold(CircuitBuilder& b, const FxpVar& x, double beta);

/// Degree-9 odd Chebyshev approximation of the sigmoid, evaluated in the
/// canonical odd-power Horner order shared with fxp::sigmoid_poly.
FxpVar sigmoid(CircuitBuilder& b, const FxpVar& x);

/// Batch mean across K vectors: constant multiply by encode(1/K), one rescale
/// per component.
std::vector<FxpVar> average(CircuitBuilder& b,
                            std::span<const std::vector<FxpVar>> vectors);

/// 1 iff the number of mismatched bits is <= threshold T = floor(theta*B).
BitVar ber_check(CircuitBuilder& b, std::span<const BitVar> wm,
                 std::span<const BitVar> wm_hat, uint64_t max_mismatches);

/// AND-tree over bits; empty input yields the constant 1.
BitVar and_bits(CircuitBuilder& b, std::span<const BitVar> bits);

/// Fixed-point raw value of a witness variable (centered lift).
int64_t raw_value(const CircuitBuilder& b, const FxpVar& v);

}  // namespace zkwm::gadgets
