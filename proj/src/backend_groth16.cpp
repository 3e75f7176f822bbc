#include <cstdint>
#include <optional>
#include <random>

#include "zkwm/backend.hpp"
#include "zkwm/errors.hpp"

extern "C" {

struct ZkgByteBuf {
  uint8_t* ptr;
  size_t len;
  size_t cap;
};

void zkg16_buf_free(ZkgByteBuf buf);
int32_t zkg16_setup(const uint8_t* cs, size_t cs_len, uint64_t seed,
                    ZkgByteBuf* pk_out, ZkgByteBuf* vk_out);
int32_t zkg16_prove(const uint8_t* pk, size_t pk_len, const uint8_t* cs,
                    size_t cs_len, const uint8_t* values, size_t values_len,
                    uint64_t seed, ZkgByteBuf* proof_out);
int32_t zkg16_verify(const uint8_t* vk, size_t vk_len, const uint8_t* proof,
                     size_t proof_len, const uint8_t* publics,
                     size_t publics_len);

}  // extern "C"

namespace zkwm {
namespace {

std::vector<uint8_t> take(ZkgByteBuf& buf) {
  std::vector<uint8_t> v(buf.ptr, buf.ptr + buf.len);
  zkg16_buf_free(buf);
  return v;
}

std::vector<uint8_t> serialize_system(const ConstraintSystem& cs) {
  VectorSink sink;
  cs.serialize(sink);
  return sink.take();
}

std::vector<uint8_t> serialize_assignment(const Assignment& assignment) {
  VectorSink sink;
  sink.u64(assignment.public_values.size());
  sink.u64(assignment.private_values.size());
  uint8_t bytes[32];
  for (const FieldScalar& v : assignment.public_values) {
    v.to_canonical_bytes(bytes);
    sink.bytes(std::span<const uint8_t>(bytes, 32));
  }
  for (const FieldScalar& v : assignment.private_values) {
    v.to_canonical_bytes(bytes);
    sink.bytes(std::span<const uint8_t>(bytes, 32));
  }
  return sink.take();
}

class Groth16Backend final : public ProofBackend {
 public:
  BackendKind kind() const override { return BackendKind::kGroth16; }

  std::pair<ProverKey, VerifierKey> setup(const ConstraintSystem& cs,
                                          uint64_t seed) override {
    auto bytes = serialize_system(cs);
    ZkgByteBuf pk_buf{}, vk_buf{};
    int32_t rc = zkg16_setup(bytes.data(), bytes.size(), seed, &pk_buf, &vk_buf);
    if (rc != 0) throw Error("groth16 setup failed (rc " + std::to_string(rc) + ")");
    Digest h = cs.hash();
    return {ProverKey{BackendKind::kGroth16, h, take(pk_buf)},
            VerifierKey{BackendKind::kGroth16, h, take(vk_buf)}};
  }

  ProofBundle prove(const ProverKey& pk, const ConstraintSystem& cs,
                    const Assignment& assignment) override {
    if (pk.backend != BackendKind::kGroth16)
      throw KeyMismatchError("prove: prover key is not a groth16 key");
    if (pk.build_hash != cs.hash())
      throw KeyMismatchError("prove: build hash mismatch");
    SatResult sat = cs.is_satisfied(assignment);
    if (!sat.ok)
      throw UnsatisfiedWitnessError("prove: assignment violates constraint " +
                                    std::to_string(sat.violated_index) + " (" +
                                    sat.annotation + ")");
    auto cs_bytes = serialize_system(cs);
    auto values = serialize_assignment(assignment);
    // Fresh zk-randomness per proof unless a seed was pinned.
    uint64_t nonce;
    if (prove_seed_) {
      nonce = *prove_seed_;
    } else {
      std::random_device rd;
      nonce = ((uint64_t)rd() << 32) | rd();
    }
    ZkgByteBuf proof_buf{};
    int32_t rc = zkg16_prove(pk.payload.data(), pk.payload.size(),
                             cs_bytes.data(), cs_bytes.size(), values.data(),
                             values.size(), nonce, &proof_buf);
    if (rc != 0) throw Error("groth16 prove failed (rc " + std::to_string(rc) + ")");
    ProofBundle bundle;
    bundle.backend = BackendKind::kGroth16;
    bundle.build_hash = pk.build_hash;
    bundle.public_values = assignment.public_values;
    bundle.proof = take(proof_buf);
    return bundle;
  }

  bool verify(const VerifierKey& vk, const ProofBundle& bundle,
              const ConstraintSystem*) override {
    if (bundle.backend != BackendKind::kGroth16) return false;
    if (vk.build_hash != bundle.build_hash) return false;
    std::vector<uint8_t> publics(bundle.public_values.size() * 32);
    for (size_t i = 0; i < bundle.public_values.size(); ++i)
      bundle.public_values[i].to_canonical_bytes(&publics[i * 32]);
    int32_t rc = zkg16_verify(vk.payload.data(), vk.payload.size(),
                              bundle.proof.data(), bundle.proof.size(),
                              publics.data(), publics.size());
    return rc == 1;
  }

  void set_prove_seed(uint64_t seed) override { prove_seed_ = seed; }

 private:
  std::optional<uint64_t> prove_seed_;
};

}  // namespace

std::unique_ptr<ProofBackend> make_groth16_backend() {
  return std::make_unique<Groth16Backend>();
}

}  // namespace zkwm
