#include "zkwm/fxp_extract.hpp"

#include <array>
#include <cmath>

#include "zkwm/errors.hpp"

namespace zkwm::fxp {
namespace {

// 0.5 + 0.2159198015 x - 0.0082176259 x^3 + 0.0001825597 x^5
//     - 0.0000018848 x^7 + 0.0000000072 x^9
constexpr std::array<double, 6> kCoeffs = {0.5,           0.2159198015,
                                           -0.0082176259, 0.0001825597,
                                           -0.0000018848, 0.0000000072};

int64_t wide_rescale(__int128 wide, FixedPointFormat fmt) {
  __int128 q = floor_div_pow2(wide, fmt.frac_bits);
  if (!fmt.raw_in_range(q)) throw OverflowError("fxp pipeline overflow");
  return (int64_t)q;
}

}  // namespace

SigmoidCoefficients sigmoid_coefficients(FixedPointFormat fmt) {
  return {fxp_encode(kCoeffs[0], fmt).raw, fxp_encode(kCoeffs[1], fmt).raw,
          fxp_encode(kCoeffs[2], fmt).raw, fxp_encode(kCoeffs[3], fmt).raw,
          fxp_encode(kCoeffs[4], fmt).raw, fxp_encode(kCoeffs[5], fmt).raw};
}

std::span<const double> sigmoid_poly_real_coefficients() { return kCoeffs; }

double sigmoid_poly_real(double x) {
  double y = x * x;
  double t = kCoeffs[5];
  t = t * y + kCoeffs[4];
  t = t * y + kCoeffs[3];
  t = t * y + kCoeffs[2];
  t = t * y + kCoeffs[1];
  return kCoeffs[0] + x * t;
}

int64_t inner_product(std::span<const int64_t> a, std::span<const int64_t> b,
                      std::optional<int64_t> bias_raw, FixedPointFormat fmt) {
  if (a.size() != b.size() || a.empty())
    throw ShapeMismatchError("fxp::inner_product: dimension mismatch");
  __int128 acc = 0;
  for (size_t i = 0; i < a.size(); ++i) acc += (__int128)a[i] * b[i];
  if (bias_raw) acc += (__int128)*bias_raw << fmt.frac_bits;
  return wide_rescale(acc, fmt);
}

std::vector<int64_t> matmul(std::span<const int64_t> a, uint32_t m, uint32_t n,
                            std::span<const int64_t> b, uint32_t l,
                            FixedPointFormat fmt) {
  if (a.size() != (size_t)m * n || b.size() != (size_t)n * l)
    throw ShapeMismatchError("fxp::matmul: shape mismatch");
  std::vector<int64_t> c((size_t)m * l);
  for (uint32_t i = 0; i < m; ++i) {
    for (uint32_t j = 0; j < l; ++j) {
      __int128 acc = 0;
      for (uint32_t k = 0; k < n; ++k)
        acc += (__int128)a[(size_t)i * n + k] * b[(size_t)k * l + j];
      c[(size_t)i * l + j] = wide_rescale(acc, fmt);
    }
  }
  return c;
}

std::vector<int64_t> conv3d(std::span<const int64_t> input, uint32_t h,
                            uint32_t w, uint32_t c,
                            std::span<const int64_t> kernels,
                            std::span<const int64_t> bias, uint32_t out_channels,
                            uint32_t kernel, uint32_t stride,
                            FixedPointFormat fmt) {
  if (kernel > h || kernel > w)
    throw ShapeMismatchError("fxp::conv3d: kernel larger than input");
  const size_t patch = (size_t)kernel * kernel * c;
  if (kernels.size() != patch * out_channels)
    throw ShapeMismatchError("fxp::conv3d: kernel tensor size");
  const uint32_t oh = (h - kernel) / stride + 1;
  const uint32_t ow = (w - kernel) / stride + 1;
  std::vector<int64_t> out((size_t)oh * ow * out_channels);
  for (uint32_t i = 0; i < oh; ++i)
    for (uint32_t j = 0; j < ow; ++j)
      for (uint32_t k = 0; k < out_channels; ++k) {
        __int128 acc = 0;
        size_t t = (size_t)k * patch;
        for (uint32_t di = 0; di < kernel; ++di)
          for (uint32_t dj = 0; dj < kernel; ++dj)
            for (uint32_t ch = 0; ch < c; ++ch)
              acc += (__int128)input[((size_t)(i * stride + di) * w +
                                      (j * stride + dj)) *
                                         c +
                                     ch] *
                     kernels[t++];
        if (!bias.empty()) acc += (__int128)bias[k] << fmt.frac_bits;
        out[((size_t)i * ow + j) * out_channels + k] = wide_rescale(acc, fmt);
      }
  return out;
}

int64_t relu(int64_t raw) { return raw >= 0 ? raw : 0; }

bool hard_threshold(int64_t raw, int64_t beta_raw) { return raw >= beta_raw; }

int64_t sigmoid_poly(int64_t raw, FixedPointFormat fmt) {
  const SigmoidCoefficients co = sigmoid_coefficients(fmt);
  const uint32_t f = fmt.frac_bits;
  int64_t y = wide_rescale((__int128)raw * raw, fmt);
  int64_t t = wide_rescale((__int128)co.c9 * y + ((__int128)co.c7 << f), fmt);
  t = wide_rescale((__int128)t * y + ((__int128)co.c5 << f), fmt);
  t = wide_rescale((__int128)t * y + ((__int128)co.c3 << f), fmt);
  t = wide_rescale((__int128)t * y + ((__int128)co.c1 << f), fmt);
  return wide_rescale((__int128)raw * t + ((__int128)co.c_half << f), fmt);
}

std::vector<int64_t> average(std::span<const std::vector<int64_t>> vectors,
                             FixedPointFormat fmt) {
  if (vectors.empty()) throw ShapeMismatchError("fxp::average: empty batch");
  const size_t m = vectors[0].size();
  const int64_t inv_k = fxp_encode(1.0 / (double)vectors.size(), fmt).raw;
  std::vector<int64_t> out(m);
  for (size_t j = 0; j < m; ++j) {
    __int128 acc = 0;
    for (const auto& v : vectors) {
      if (v.size() != m) throw ShapeMismatchError("fxp::average: ragged batch");
      acc += (__int128)v[j] * inv_k;
    }
    out[j] = wide_rescale(acc, fmt);
  }
  return out;
}

uint64_t mismatch_count(std::span<const uint8_t> a, std::span<const uint8_t> b) {
  if (a.size() != b.size())
    throw ShapeMismatchError("mismatch_count: length mismatch");
  uint64_t n = 0;
  for (size_t i = 0; i < a.size(); ++i) n += (a[i] != 0) != (b[i] != 0);
  return n;
}

QuantizedModel quantize_model(const ModelSpec& spec, const ModelWeights& w,
                              FixedPointFormat fmt) {
  if (w.layers.size() != spec.layers.size())
    throw ShapeMismatchError("quantize_model: layer count mismatch");
  QuantizedModel q;
  q.format = fmt;
  for (const LayerWeights& lw : w.layers) {
    std::vector<int64_t> qw(lw.weight.size()), qb(lw.bias.size());
    for (size_t i = 0; i < lw.weight.size(); ++i)
      qw[i] = fxp_encode(lw.weight[i], fmt).raw;
    for (size_t i = 0; i < lw.bias.size(); ++i)
      qb[i] = fxp_encode(lw.bias[i], fmt).raw;
    q.weights.push_back(std::move(qw));
    q.biases.push_back(std::move(qb));
  }
  return q;
}

QuantizedKey quantize_key(const WatermarkKey& key, FixedPointFormat fmt) {
  QuantizedKey q;
  q.format = fmt;
  for (const Tensor& t : key.trigger_inputs) {
    std::vector<int64_t> qt(t.data.size());
    for (size_t i = 0; i < t.data.size(); ++i)
      qt[i] = fxp_encode(t.data[i], fmt).raw;
    q.triggers.push_back(std::move(qt));
  }
  q.projection.resize(key.projection.size());
  for (size_t i = 0; i < key.projection.size(); ++i)
    q.projection[i] = fxp_encode(key.projection[i], fmt).raw;
  q.wm_bits = key.wm_bits;
  return q;
}

std::vector<int64_t> forward_prefix(const ModelSpec& spec,
                                    const QuantizedModel& model,
                                    std::span<const int64_t> input,
                                    uint32_t until) {
  auto shapes = spec.activation_shapes();
  if (until < 1 || until > spec.layers.size())
    throw ShapeMismatchError("forward_prefix: layer index out of range");
  std::vector<int64_t> act(input.begin(), input.end());
  Shape3 shape = spec.input_shape;
  FixedPointFormat fmt = model.format;
  for (uint32_t li = 0; li < until; ++li) {
    const LayerSpec& layer = spec.layers[li];
    if (const auto* dense = std::get_if<DenseLayer>(&layer)) {
      const auto& wq = model.weights[li];
      const auto& bq = model.biases[li];
      size_t in = act.size();
      std::vector<int64_t> next(dense->out_features);
      for (uint32_t o = 0; o < dense->out_features; ++o)
        next[o] = inner_product(
            std::span<const int64_t>(&wq[(size_t)o * in], in), act, bq[o], fmt);
      act = std::move(next);
    } else if (const auto* conv = std::get_if<Conv3DLayer>(&layer)) {
      act = conv3d(act, shape.h, shape.w, shape.c, model.weights[li],
                   model.biases[li], conv->out_channels, conv->kernel,
                   conv->stride, fmt);
    } else if (std::holds_alternative<ReluLayer>(layer)) {
      for (int64_t& v : act) v = relu(v);
    } else {
      throw UnsupportedLayerError(
          std::string("forward_prefix: unsupported layer ") +
          layer_name(layer));
    }
    shape = shapes[li];
  }
  return act;
}

FxpExtractionTrace extract_fixed_point(const ModelSpec& spec,
                                       const QuantizedModel& model,
                                       const QuantizedKey& key,
                                       uint32_t embedded_layer, double theta) {
  FxpExtractionTrace trace;
  FixedPointFormat fmt = model.format;
  for (const auto& trig : key.triggers)
    trace.activations.push_back(
        forward_prefix(spec, model, trig, embedded_layer));
  trace.mean = average(trace.activations, fmt);
  const size_t m = trace.mean.size();
  const size_t n = key.wm_bits.size();
  if (key.projection.size() != m * n)
    throw ShapeMismatchError("extract_fixed_point: projection shape");
  trace.projected = matmul(trace.mean, 1, (uint32_t)m, key.projection,
                           (uint32_t)n, fmt);
  trace.response.resize(n);
  trace.extracted_bits.resize(n);
  const int64_t half = fxp_encode(0.5, fmt).raw;
  for (size_t j = 0; j < n; ++j) {
    trace.response[j] = sigmoid_poly(trace.projected[j], fmt);
    trace.extracted_bits[j] = hard_threshold(trace.response[j], half) ? 1 : 0;
  }
  trace.mismatches = mismatch_count(key.wm_bits, trace.extracted_bits);
  trace.valid = trace.mismatches <= (uint64_t)(theta * (double)n);
  return trace;
}

}  // namespace zkwm::fxp
