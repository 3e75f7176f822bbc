#pragma once

#include <string>

#include "zkwm/backend.hpp"
#include "zkwm/compiler.hpp"
#include "zkwm/nn.hpp"

namespace zkwm {

/// Model file: "ZKWM" magic, version, JSON header (architecture, shapes,
/// fixed-point format, seed provenance), then the raw little-endian weight
/// payload in layer order (weights then biases).
struct ModelFile {
  ModelSpec spec;
  ModelWeights weights;
  FixedPointFormat format;
  uint64_t seed = 0;
};

void save_model(const std::string& path, const ModelFile& model);
ModelFile load_model(const std::string& path);

/// Watermark key file: JSON with base64 tensor payloads for X^key and A, hex
/// signature bits, integer l_wm and B, decimal theta.
void save_key(const std::string& path, const WatermarkKey& key,
              const Shape3& input_shape);
WatermarkKey load_key(const std::string& path);

/// Circuit artifact: the canonical constraint-system binary, plus a JSON
/// metadata sidecar at `path + ".json"` (format, layouts, build hash).
void save_circuit(const std::string& path, const CircuitArtifact& artifact);
CircuitArtifact load_circuit(const std::string& path);

/// Backend key and proof files: 4-byte magic, version, backend id, build
/// hash, length-prefixed payload.
void save_prover_key(const std::string& path, const ProverKey& pk);
ProverKey load_prover_key(const std::string& path);
void save_verifier_key(const std::string& path, const VerifierKey& vk);
VerifierKey load_verifier_key(const std::string& path);
void save_proof(const std::string& path, const ProofBundle& bundle);
ProofBundle load_proof(const std::string& path);

std::string spec_to_json(const ModelSpec& spec);
ModelSpec spec_from_json(const std::string& json);

/// Dataset file: "ZKDS" magic, version, class count, sample count, shape,
/// then per sample a u32 label and the raw little-endian payload.
void save_dataset(const std::string& path, const Dataset& data);
Dataset load_dataset(const std::string& path);

}  // namespace zkwm
