#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "zkwm/fixed_point.hpp"
#include "zkwm/nn.hpp"

// Scalar fixed-point reference pipeline: the exact arithmetic the circuit
// gadgets must reproduce bit for bit (wide 128-bit accumulation, one floor
// rescale per inner product, canonical sigmoid evaluation order).
namespace zkwm::fxp {

struct SigmoidCoefficients {
  int64_t c_half, c1, c3, c5, c7, c9;  // encoded at the format's scale
};

SigmoidCoefficients sigmoid_coefficients(FixedPointFormat fmt);

/// Exact polynomial coefficients of the degree-9 approximation (doubles).
std::span<const double> sigmoid_poly_real_coefficients();

/// Degree-9 approximation evaluated in real arithmetic (reference for drift
/// reports; not the in-circuit path).
double sigmoid_poly_real(double x);

int64_t inner_product(std::span<const int64_t> a, std::span<const int64_t> b,
                      std::optional<int64_t> bias_raw, FixedPointFormat fmt);

std::vector<int64_t> matmul(std::span<const int64_t> a, uint32_t m, uint32_t n,
                            std::span<const int64_t> b, uint32_t l,
                            FixedPointFormat fmt);

std::vector<int64_t> conv3d(std::span<const int64_t> input, uint32_t h,
                            uint32_t w, uint32_t c,
                            std::span<const int64_t> kernels,
                            std::span<const int64_t> bias, uint32_t out_channels,
                            uint32_t kernel, uint32_t stride,
                            FixedPointFormat fmt);

int64_t relu(int64_t raw);

/// 1 iff x >= beta.
bool hard_threshold(int64_t raw, int64_t beta_raw);

/// Canonical odd-power Horner order; shared contract with gadgets::sigmoid.
int64_t sigmoid_poly(int64_t raw, FixedPointFormat fmt);

std::vector<int64_t> average(std::span<const std::vector<int64_t>> vectors,
                             FixedPointFormat fmt);

uint64_t mismatch_count(std::span<const uint8_t> a, std::span<const uint8_t> b);

/// Quantized model + key, entry-wise fxp_encode of the real tensors.
struct QuantizedModel {
  std::vector<std::vector<int64_t>> weights;  // per layer
  std::vector<std::vector<int64_t>> biases;
  FixedPointFormat format;
};
struct QuantizedKey {
  std::vector<std::vector<int64_t>> triggers;
  std::vector<int64_t> projection;
  std::vector<uint8_t> wm_bits;
  FixedPointFormat format;
};

QuantizedModel quantize_model(const ModelSpec& spec, const ModelWeights& w,
                              FixedPointFormat fmt);
QuantizedKey quantize_key(const WatermarkKey& key, FixedPointFormat fmt);

struct FxpExtractionTrace {
  std::vector<std::vector<int64_t>> activations;  // at l_wm, per trigger
  std::vector<int64_t> mean;
  std::vector<int64_t> projected;
  std::vector<int64_t> response;
  std::vector<uint8_t> extracted_bits;
  uint64_t mismatches = 0;
  bool valid = false;  // mismatches <= floor(theta * B)
};

/// Fixed-point counterpart of extract_plaintext; the oracle the compiled
/// circuit's witness must match exactly.
FxpExtractionTrace extract_fixed_point(const ModelSpec& spec,
                                       const QuantizedModel& model,
                                       const QuantizedKey& key,
                                       uint32_t embedded_layer, double theta);

/// Feed-forward through the supported prefix (Dense/Conv3D/ReLU). `until`
/// counts layers from 1; returns the output of layer `until`.
std::vector<int64_t> forward_prefix(const ModelSpec& spec,
                                    const QuantizedModel& model,
                                    std::span<const int64_t> input,
                                    uint32_t until);

}  // namespace zkwm::fxp
