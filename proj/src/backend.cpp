#include "zkwm/backend.hpp"

#include "zkwm/errors.hpp"

namespace zkwm {
namespace {

void require_hash(const Digest& a, const Digest& b, const char* what) {
  if (a != b) throw KeyMismatchError(std::string(what) + ": build hash mismatch");
}

class CheckBackend final : public ProofBackend {
 public:
  BackendKind kind() const override { return BackendKind::kCheck; }

  std::pair<ProverKey, VerifierKey> setup(const ConstraintSystem& cs,
                                          uint64_t) override {
    Digest h = cs.hash();
    return {ProverKey{BackendKind::kCheck, h, {}},
            VerifierKey{BackendKind::kCheck, h, {}}};
  }

  ProofBundle prove(const ProverKey& pk, const ConstraintSystem& cs,
                    const Assignment& assignment) override {
    require_hash(pk.build_hash, cs.hash(), "prove");
    SatResult sat = cs.is_satisfied(assignment);
    if (!sat.ok)
      throw UnsatisfiedWitnessError("prove: assignment violates constraint " +
                                    std::to_string(sat.violated_index) + " (" +
                                    sat.annotation + ")");
    ProofBundle bundle;
    bundle.backend = BackendKind::kCheck;
    bundle.build_hash = pk.build_hash;
    bundle.public_values = assignment.public_values;
    // The "proof" is the private assignment itself; verification re-runs the
    // satisfiability check. Transparent and NOT zero-knowledge.
    bundle.proof.resize(assignment.private_values.size() * 32);
    for (size_t i = 0; i < assignment.private_values.size(); ++i)
      assignment.private_values[i].to_canonical_bytes(&bundle.proof[i * 32]);
    return bundle;
  }

  bool verify(const VerifierKey& vk, const ProofBundle& bundle,
              const ConstraintSystem* cs) override {
    if (bundle.backend != BackendKind::kCheck) return false;
    if (vk.build_hash != bundle.build_hash) return false;
    if (!cs) throw MissingAssignmentError("check verify requires the circuit");
    if (!(cs->hash() == vk.build_hash)) return false;
    if (bundle.public_values.size() != cs->num_public()) return false;
    if (bundle.proof.size() != cs->num_private() * 32) return false;
    Assignment assignment;
    assignment.public_values = bundle.public_values;
    assignment.private_values.reserve(cs->num_private());
    for (uint64_t i = 0; i < cs->num_private(); ++i) {
      auto v = FieldScalar::from_canonical_bytes(&bundle.proof[i * 32]);
      if (!v) return false;
      assignment.private_values.push_back(*v);
    }
    return cs->is_satisfied(assignment).ok;
  }
};

}  // namespace

const char* backend_name(BackendKind kind) {
  switch (kind) {
    case BackendKind::kCheck:
      return "check";
    case BackendKind::kGroth16:
      return "groth16";
  }
  return "unknown";
}

std::unique_ptr<ProofBackend> make_check_backend() {
  return std::make_unique<CheckBackend>();
}

#ifndef ZKWM_HAVE_GROTH16
std::unique_ptr<ProofBackend> make_groth16_backend() { return nullptr; }
#endif

std::unique_ptr<ProofBackend> make_backend(BackendKind kind) {
  switch (kind) {
    case BackendKind::kCheck:
      return make_check_backend();
    case BackendKind::kGroth16:
      return make_groth16_backend();
  }
  return nullptr;
}

}  // namespace zkwm
