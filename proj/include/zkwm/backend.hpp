#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "zkwm/r1cs.hpp"

namespace zkwm {

enum class BackendKind : uint32_t { kCheck = 1, kGroth16 = 2 };

const char* backend_name(BackendKind kind);

struct ProverKey {
  BackendKind backend = BackendKind::kCheck;
  Digest build_hash{};
  std::vector<uint8_t> payload;
};

struct VerifierKey {
  BackendKind backend = BackendKind::kCheck;
  Digest build_hash{};
  std::vector<uint8_t> payload;
};

struct ProofBundle {
  BackendKind backend = BackendKind::kCheck;
  Digest build_hash{};
  std::vector<FieldScalar> public_values;
  std::vector<uint8_t> proof;
};

/// Setup/Prove/Verify contract. Keys and proofs bind to the circuit build
/// hash; mismatches are rejected before any other work.
class ProofBackend {
 public:
  virtual ~ProofBackend() = default;
  virtual BackendKind kind() const = 0;

  virtual std::pair<ProverKey, VerifierKey> setup(const ConstraintSystem& cs,
                                                  uint64_t seed) = 0;

  /// Throws UnsatisfiedWitnessError when the assignment does not satisfy the
  /// system, KeyMismatchError when pk does not bind to cs.
  virtual ProofBundle prove(const ProverKey& pk, const ConstraintSystem& cs,
                            const Assignment& assignment) = 0;

  /// `cs` is required by the transparent backend (it re-evaluates) and
  /// ignored by succinct backends. Never consults private inputs beyond the
  /// bundle itself.
  virtual bool verify(const VerifierKey& vk, const ProofBundle& bundle,
                      const ConstraintSystem* cs) = 0;

  /// Pins the proof randomness for reproducible runs; by default proofs draw
  /// fresh randomness.
  virtual void set_prove_seed(uint64_t) {}
};

/// Transparent satisfiability backend. NOT zero-knowledge: the bundle embeds
/// the witness and verification re-evaluates the constraints. It exists as
/// the trust-free oracle the cryptographic backend is tested against.
std::unique_ptr<ProofBackend> make_check_backend();

/// Groth16 over BN254 (delegated to an external proving library). Returns
/// nullptr when the backend is not compiled in. The setup ceremony is a
/// seeded stand-in: INSECURE outside testing, by construction.
std::unique_ptr<ProofBackend> make_groth16_backend();

std::unique_ptr<ProofBackend> make_backend(BackendKind kind);

}  // namespace zkwm
