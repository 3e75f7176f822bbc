#include "zkwm/compiler.hpp"

#include <cmath>

#include "zkwm/errors.hpp"
#include "zkwm/gadgets.hpp"

namespace zkwm {
namespace {

using gadgets::BitVar;
using gadgets::FxpMatrix;
using gadgets::FxpTensor3;
using gadgets::FxpVar;

struct SynthesisValues {
  const fxp::QuantizedModel* model = nullptr;
  const fxp::QuantizedKey* key = nullptr;
};

FieldScalar raw_field(int64_t raw) { return FieldScalar::from_int64(raw); }

void check_prefix_supported(const ModelSpec& spec, uint32_t l_wm) {
  if (l_wm < 1 || l_wm > spec.layers.size())
    throw ShapeMismatchError("embedded layer index out of range");
  for (uint32_t i = 0; i < l_wm; ++i) {
    const LayerSpec& layer = spec.layers[i];
    if (std::holds_alternative<MaxPoolLayer>(layer) ||
        std::holds_alternative<SigmoidLayer>(layer))
      throw UnsupportedLayerError(
          std::string("layer ") + std::to_string(i) + " (" +
          layer_name(layer) + ") is not supported before the embedded layer");
  }
}

/// Shared between compile (no values) and assign (witness mode): the entire
/// circuit, emitted in one deterministic order.
struct Synthesizer {
  CircuitBuilder& b;
  const ModelSpec& spec;
  const FixedPointFormat fmt;
  const uint32_t l_wm;
  const uint32_t bits;      // B
  const uint32_t triggers;  // K
  const uint64_t max_mismatches;
  const SynthesisValues vals;
  CircuitMetadata* meta;  // layout sink (compile pass only)
  Variable output_var;

  void record_public(const std::string& name, uint64_t offset, uint64_t count) {
    if (meta) meta->public_layout.push_back({name, Visibility::kPublic, offset, count});
  }
  void record_private(const std::string& name, uint64_t offset, uint64_t count) {
    if (meta)
      meta->witness_layout.push_back({name, Visibility::kPrivate, offset, count});
  }

  // Public tensors carry the offset-binary encoding raw + 2^(W-1): the
  // instance then consists of short scalars, which keeps the verifier-side
  // multi-scalar multiplication cheap. A linear tie per entry recovers the
  // signed value the gadgets consume.
  std::vector<FxpVar> alloc_public_tensor(const std::string& name,
                                          const std::vector<int64_t>* raws,
                                          size_t count) {
    uint64_t layout_offset = b.num_public();
    const FieldScalar half_range = field_pow2(fmt.total_bits - 1);
    std::vector<FxpVar> out;
    out.reserve(count);
    Scope scope(b, "input/" + name);
    for (size_t i = 0; i < count; ++i) {
      FieldScalar signed_value =
          raws ? raw_field((*raws)[i]) : FieldScalar::zero();
      Variable pub = b.alloc_public(signed_value + half_range);
      Variable shifted = b.alloc_private(signed_value);
      b.enforce(LinearCombination(pub) -
                    LinearCombination::constant(half_range) -
                    LinearCombination(shifted),
                LinearCombination::constant(FieldScalar::one()),
                LinearCombination());
      out.push_back({shifted, fmt});
    }
    record_public(name, layout_offset, count);
    return out;
  }

  std::vector<FxpVar> alloc_private_tensor(const std::string& name,
                                           const std::vector<int64_t>* raws,
                                           size_t count) {
    uint64_t offset = b.num_private();
    std::vector<FxpVar> out;
    out.reserve(count);
    for (size_t i = 0; i < count; ++i) {
      FieldScalar v = raws ? raw_field((*raws)[i]) : FieldScalar::zero();
      out.push_back({b.alloc_private(v), fmt});
    }
    record_private(name, offset, count);
    return out;
  }

  void run() {
    auto shapes = spec.activation_shapes();
    const size_t feature_count = shapes[l_wm - 1].size();

    // Public inputs: quantized weights of the evaluated prefix, then the BER
    // threshold constant, then the output slot.
    std::vector<std::vector<FxpVar>> weight_vars(l_wm);
    std::vector<std::vector<FxpVar>> bias_vars(l_wm);
    for (uint32_t li = 0; li < l_wm; ++li) {
      const LayerSpec& layer = spec.layers[li];
      if (std::holds_alternative<DenseLayer>(layer) ||
          std::holds_alternative<Conv3DLayer>(layer)) {
        size_t wcount, bcount;
        Shape3 in_shape = li == 0 ? spec.input_shape : shapes[li - 1];
        if (const auto* dense = std::get_if<DenseLayer>(&layer)) {
          wcount = (size_t)dense->out_features * in_shape.size();
          bcount = dense->out_features;
        } else {
          const auto& conv = std::get<Conv3DLayer>(layer);
          wcount = (size_t)conv.kernel * conv.kernel * in_shape.c *
                   conv.out_channels;
          bcount = conv.out_channels;
        }
        std::string base = "layer" + std::to_string(li);
        weight_vars[li] = alloc_public_tensor(
            base + ".weight", vals.model ? &vals.model->weights[li] : nullptr,
            wcount);
        bias_vars[li] = alloc_public_tensor(
            base + ".bias", vals.model ? &vals.model->biases[li] : nullptr,
            bcount);
      }
    }

    uint64_t t_offset = b.num_public();
    Variable t_var = b.alloc_public(FieldScalar::from_uint64(max_mismatches));
    record_public("ber_threshold", t_offset, 1);
    {
      Scope scope(b, "ber_threshold_pin");
      b.enforce(t_var, LinearCombination::constant(FieldScalar::one()),
                LinearCombination::constant(
                    FieldScalar::from_uint64(max_mismatches)));
    }

    uint64_t out_offset = b.num_public();
    output_var = b.alloc_public();  // value set after the BER check
    record_public("output", out_offset, 1);

    // Private inputs: trigger keys, projection matrix, watermark bits.
    std::vector<std::vector<FxpVar>> trigger_vars;
    for (uint32_t t = 0; t < triggers; ++t)
      trigger_vars.push_back(alloc_private_tensor(
          "xkey" + std::to_string(t),
          vals.key ? &vals.key->triggers[t] : nullptr,
          spec.input_shape.size()));
    std::vector<FxpVar> projection =
        alloc_private_tensor("projection",
                             vals.key ? &vals.key->projection : nullptr,
                             feature_count * bits);
    uint64_t wm_offset = b.num_private();
    std::vector<BitVar> wm_bits;
    {
      Scope scope(b, "wm_bits");
      for (uint32_t j = 0; j < bits; ++j)
        wm_bits.push_back(gadgets::alloc_bit(
            b, vals.key ? vals.key->wm_bits[j] != 0 : false));
    }
    record_private("wm", wm_offset, bits);

    // zkFeedForward through the prefix, per trigger.
    std::vector<std::vector<FxpVar>> activations;
    for (uint32_t t = 0; t < triggers; ++t) {
      Scope trig_scope(b, "feedforward" + std::to_string(t));
      std::vector<FxpVar> act = trigger_vars[t];
      Shape3 shape = spec.input_shape;
      for (uint32_t li = 0; li < l_wm; ++li) {
        const LayerSpec& layer = spec.layers[li];
        if (const auto* dense = std::get_if<DenseLayer>(&layer)) {
          Scope scope(b, "dense" + std::to_string(li));
          std::vector<FxpVar> next;
          next.reserve(dense->out_features);
          size_t in = act.size();
          for (uint32_t o = 0; o < dense->out_features; ++o) {
            std::span<const FxpVar> row(&weight_vars[li][(size_t)o * in], in);
            next.push_back(gadgets::inner_product(b, row, act, bias_vars[li][o]));
          }
          act = std::move(next);
        } else if (const auto* conv = std::get_if<Conv3DLayer>(&layer)) {
          Scope scope(b, "conv" + std::to_string(li));
          FxpTensor3 in_t{shape.h, shape.w, shape.c, act};
          FxpTensor3 out_t =
              gadgets::conv3d(b, in_t, weight_vars[li], conv->out_channels,
                              conv->kernel, conv->stride, bias_vars[li]);
          act = std::move(out_t.vars);
        } else {  // ReLU (prefix is validated)
          Scope scope(b, "relu" + std::to_string(li));
          for (FxpVar& v : act) v = gadgets::relu(b, v);
        }
        shape = shapes[li];
      }
      activations.push_back(std::move(act));
    }

    // mu = zkAverage(a)
    std::vector<FxpVar> mu = gadgets::average(b, activations);

    // G = zkSigmoid(mu x A)
    FxpMatrix mu_m{1, (uint32_t)feature_count, mu};
    FxpMatrix a_m{(uint32_t)feature_count, bits, projection};
    FxpMatrix z = gadgets::matmul(b, mu_m, a_m);
    std::vector<BitVar> extracted;
    extracted.reserve(bits);
    for (uint32_t j = 0; j < bits; ++j) {
      FxpVar g = gadgets::sigmoid(b, z.vars[j]);
      extracted.push_back(gadgets::hard_threshold(b, g, 0.5));
    }

    // valid_BER = zkBER(wm, wm_hat, theta)
    BitVar valid = gadgets::ber_check(b, wm_bits, extracted, max_mismatches);

    // check accumulates gadget well-formedness bits; all current gadgets
    // enforce well-formedness structurally, so it degenerates to 1.
    std::vector<BitVar> check_bits;
    BitVar check = gadgets::and_bits(b, check_bits);

    Scope scope(b, "output");
    Variable result = b.alloc_hint(
        [&] { return b.value(check.var) * b.value(valid.var); });
    b.enforce(check.var, valid.var, result);
    if (b.witness_mode()) b.set_value(output_var, b.value(result));
    // output slot equals check AND valid_BER, and is itself boolean.
    b.enforce(LinearCombination(output_var) - LinearCombination(result),
              LinearCombination::constant(FieldScalar::one()),
              LinearCombination());
    b.enforce(output_var,
              LinearCombination::constant(FieldScalar::one()) -
                  LinearCombination(output_var),
              LinearCombination());
  }
};

}  // namespace

CircuitArtifact compile_extraction(const ModelSpec& spec,
                                   FixedPointFormat format,
                                   uint32_t embedded_layer,
                                   uint32_t signature_bits,
                                   uint32_t trigger_count, double theta) {
  check_prefix_supported(spec, embedded_layer);
  if (signature_bits == 0 || trigger_count == 0)
    throw ShapeMismatchError("compile: B and trigger count must be positive");
  if (theta < 0.0 || theta >= 1.0)
    throw ShapeMismatchError("compile: theta must lie in [0, 1)");

  CircuitArtifact artifact;
  artifact.meta.format = format;
  artifact.meta.spec = spec;
  artifact.meta.embedded_layer = embedded_layer;
  artifact.meta.signature_bits = signature_bits;
  artifact.meta.trigger_count = trigger_count;
  artifact.meta.theta = theta;
  artifact.meta.max_mismatches =
      (uint64_t)std::floor(theta * (double)signature_bits);

  CircuitBuilder b(CircuitBuilder::Mode::kCompile);
  Synthesizer synth{b,
                    spec,
                    format,
                    embedded_layer,
                    signature_bits,
                    trigger_count,
                    artifact.meta.max_mismatches,
                    {},
                    &artifact.meta,
                    {}};
  synth.run();
  auto [cs, assignment] = std::move(b).finalize();
  artifact.cs = std::move(cs);
  artifact.meta.build_hash = artifact.cs.hash();
  return artifact;
}

AssignedValues assign_extraction(const CircuitArtifact& artifact,
                                 const ModelWeights& weights,
                                 const WatermarkKey& key) {
  const CircuitMetadata& meta = artifact.meta;
  if (key.trigger_inputs.size() != meta.trigger_count ||
      key.wm_bits.size() != meta.signature_bits)
    throw ShapeMismatchError("assign: key does not match circuit metadata");
  if (key.embedded_layer != meta.embedded_layer)
    throw ShapeMismatchError("assign: embedded layer mismatch");

  fxp::QuantizedModel qmodel = fxp::quantize_model(meta.spec, weights, meta.format);
  fxp::QuantizedKey qkey = fxp::quantize_key(key, meta.format);

  CircuitBuilder b(CircuitBuilder::Mode::kWitness);
  Synthesizer synth{b,
                    meta.spec,
                    meta.format,
                    meta.embedded_layer,
                    meta.signature_bits,
                    meta.trigger_count,
                    meta.max_mismatches,
                    {&qmodel, &qkey},
                    nullptr,
                    {}};
  synth.run();
  Variable output_var = synth.output_var;
  auto [cs, assignment] = std::move(b).finalize();
  if (!(cs.hash() == artifact.meta.build_hash))
    throw KeyMismatchError("assign: replayed circuit hash differs from artifact");

  AssignedValues out;
  out.output_bit = !assignment.get(output_var).is_zero();
  out.assignment = std::move(assignment);
  return out;
}

DriftReport quantization_drift_report(const ModelSpec& spec,
                                      const ModelWeights& weights,
                                      const WatermarkKey& key,
                                      FixedPointFormat format) {
  ExtractionTrace real = extract_plaintext(spec, weights, key);
  fxp::QuantizedModel qmodel = fxp::quantize_model(spec, weights, format);
  fxp::QuantizedKey qkey = fxp::quantize_key(key, format);
  fxp::FxpExtractionTrace fixed = fxp::extract_fixed_point(
      spec, qmodel, qkey, key.embedded_layer, key.theta);

  DriftReport report;
  auto stage = [&](const std::string& name, const std::vector<double>& re,
                   const std::vector<int64_t>& fx) {
    double worst = 0.0;
    for (size_t i = 0; i < re.size() && i < fx.size(); ++i)
      worst = std::max(worst,
                       std::abs(re[i] - fxp_decode({fx[i], format})));
    report.stages.push_back({name, worst});
  };

  double act_worst = 0.0;
  for (size_t t = 0; t < real.activations.size(); ++t)
    for (size_t i = 0; i < real.activations[t].size(); ++i)
      act_worst = std::max(
          act_worst, std::abs(real.activations[t][i] -
                              fxp_decode({fixed.activations[t][i], format})));
  report.stages.push_back({"activations", act_worst});
  stage("mean", real.mean, fixed.mean);
  stage("projected", real.projected, fixed.projected);
  stage("response", real.response, fixed.response);

  report.real_bits = real.extracted_bits;
  report.fixed_bits = fixed.extracted_bits;
  report.bits_differ = real.extracted_bits != fixed.extracted_bits;
  return report;
}

}  // namespace zkwm
