#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "zkwm/fxp_extract.hpp"
#include "zkwm/nn.hpp"
#include "zkwm/r1cs.hpp"

namespace zkwm {

/// Named slice of input variables (ordinals within the visibility class).
struct LayoutBlock {
  std::string name;
  Visibility vis = Visibility::kPublic;
  uint64_t offset = 0;
  uint64_t count = 0;
};

struct CircuitMetadata {
  FixedPointFormat format;
  ModelSpec spec;
  uint32_t embedded_layer = 0;   // l_wm
  uint32_t signature_bits = 0;   // B
  uint32_t trigger_count = 0;    // |X^key|; circuit topology depends on it
  double theta = 0.0;
  uint64_t max_mismatches = 0;   // T = floor(theta * B), public constant
  std::vector<LayoutBlock> public_layout;
  std::vector<LayoutBlock> witness_layout;
  Digest build_hash{};
};

/// Compiled extraction circuit: constraint system plus the input layouts a
/// backend needs to bind public/private values.
struct CircuitArtifact {
  ConstraintSystem cs;
  CircuitMetadata meta;
};

/// Values produced by assign(): the full split assignment plus the value the
/// circuit's public output slot carries.
struct AssignedValues {
  Assignment assignment;
  bool output_bit = false;
};

/// Synthesizes the full extraction circuit (Dense/Conv3D/ReLU feed-forward
/// through layer l_wm, then average, projection, sigmoid, thresholding, BER)
/// with no values. Layers count from 1; the extracted activation is the
/// output of layer l_wm. Throws UnsupportedLayerError if the evaluated
/// prefix contains MaxPool or Sigmoid layers.
CircuitArtifact compile_extraction(const ModelSpec& spec,
                                   FixedPointFormat format,
                                   uint32_t embedded_layer,
                                   uint32_t signature_bits,
                                   uint32_t trigger_count, double theta);

/// Quantizes model and key, replays the synthesis with witness generation,
/// and returns the assignment. The replayed build hash must match the
/// artifact's; a mismatch throws KeyMismatchError.
AssignedValues assign_extraction(const CircuitArtifact& artifact,
                                 const ModelWeights& weights,
                                 const WatermarkKey& key);

struct DriftStage {
  std::string stage;
  double max_abs_deviation = 0.0;
};

struct DriftReport {
  std::vector<DriftStage> stages;
  std::vector<uint8_t> real_bits;
  std::vector<uint8_t> fixed_bits;
  bool bits_differ = false;
};

/// Runs the real-arithmetic and fixed-point extraction pipelines side by side
/// and reports per-stage deviation plus extracted-bit divergence.
DriftReport quantization_drift_report(const ModelSpec& spec,
                                      const ModelWeights& weights,
                                      const WatermarkKey& key,
                                      FixedPointFormat format);

}  // namespace zkwm
