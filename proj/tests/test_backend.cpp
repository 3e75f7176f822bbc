#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "zkwm/backend.hpp"
#include "zkwm/bench_circuits.hpp"
#include "zkwm/errors.hpp"

using namespace zkwm;

namespace {

const FixedPointFormat kFmt;

std::vector<bench::GadgetCircuit> small_matrix(uint64_t seed) {
  std::vector<bench::GadgetCircuit> circuits;
  circuits.push_back(bench::build_matmul(3, kFmt, seed));
  circuits.push_back(bench::build_conv3d(5, 5, 2, 3, 3, 1, kFmt, seed + 1));
  circuits.push_back(bench::build_relu(8, kFmt, seed + 2));
  circuits.push_back(bench::build_sigmoid(4, kFmt, seed + 3));
  circuits.push_back(bench::build_hard_threshold(8, kFmt, seed + 4));
  circuits.push_back(bench::build_average(4, 6, kFmt, seed + 5));
  circuits.push_back(bench::build_ber(16, 0.25, kFmt, seed + 6));
  return circuits;
}

ProofBundle flip_public_bit(const ProofBundle& bundle, std::mt19937_64& rng) {
  ProofBundle mutated = bundle;
  size_t victim = rng() % mutated.public_values.size();
  uint8_t bytes[32];
  mutated.public_values[victim].to_canonical_bytes(bytes);
  // Flip one low bit; stays canonical with overwhelming probability, and a
  // non-canonical result would also be rejected.
  bytes[rng() % 6] ^= (uint8_t)(1u << (rng() % 8));
  auto back = FieldScalar::from_canonical_bytes(bytes);
  mutated.public_values[victim] =
      back ? *back : mutated.public_values[victim] + FieldScalar::one();
  return mutated;
}

}  // namespace

TEST_CASE("check backend: completeness across the gadget matrix") {
  auto backend = make_check_backend();
  for (auto& circuit : small_matrix(61)) {
    auto [pk, vk] = backend->setup(circuit.cs, 7);
    CHECK(pk.build_hash == vk.build_hash);
    ProofBundle bundle = backend->prove(pk, circuit.cs, circuit.assignment);
    CHECK(backend->verify(vk, bundle, &circuit.cs));
  }
}

TEST_CASE("check backend: empty circuit accepts trivially") {
  CircuitBuilder b(CircuitBuilder::Mode::kWitness);
  auto [cs, assignment] = std::move(b).finalize();
  auto backend = make_check_backend();
  auto [pk, vk] = backend->setup(cs, 1);
  ProofBundle bundle = backend->prove(pk, cs, assignment);
  CHECK(backend->verify(vk, bundle, &cs));
}

TEST_CASE("setup binds to the circuit") {
  auto backend = make_check_backend();
  auto a = bench::build_relu(8, kFmt, 62);
  auto c = bench::build_relu(9, kFmt, 62);
  auto [pk_a, vk_a] = backend->setup(a.cs, 7);
  auto [pk_a2, vk_a2] = backend->setup(a.cs, 8);
  CHECK(pk_a.build_hash == pk_a2.build_hash);  // same circuit, same binding
  auto [pk_c, vk_c] = backend->setup(c.cs, 7);
  CHECK(pk_a.build_hash != pk_c.build_hash);

  // Keys from circuit A are rejected when proving circuit C.
  CHECK_THROWS_AS(backend->prove(pk_a, c.cs, c.assignment), KeyMismatchError);

  // Verifier-side binding: bundle hash vs key hash.
  ProofBundle bundle = backend->prove(pk_a, a.cs, a.assignment);
  CHECK(!backend->verify(vk_c, bundle, &c.cs));
}

TEST_CASE("prove refuses an unsatisfying witness") {
  auto backend = make_check_backend();
  auto circuit = bench::build_sigmoid(3, kFmt, 63);
  auto [pk, vk] = backend->setup(circuit.cs, 7);
  Assignment bad = circuit.assignment;
  bad.private_values[5] += FieldScalar::one();
  CHECK_THROWS_AS(backend->prove(pk, circuit.cs, bad),
                  UnsatisfiedWitnessError);
}

TEST_CASE("check backend: public-input binding under bit flips") {
  auto backend = make_check_backend();
  auto circuit = bench::build_matmul(3, kFmt, 64);
  auto [pk, vk] = backend->setup(circuit.cs, 7);
  ProofBundle bundle = backend->prove(pk, circuit.cs, circuit.assignment);
  std::mt19937_64 rng(65);
  for (int trial = 0; trial < 30; ++trial)
    CHECK(!backend->verify(vk, flip_public_bit(bundle, rng), &circuit.cs));
}

TEST_CASE("check backend: tampered witness payload rejects") {
  auto backend = make_check_backend();
  auto circuit = bench::build_average(3, 4, kFmt, 66);
  auto [pk, vk] = backend->setup(circuit.cs, 7);
  ProofBundle bundle = backend->prove(pk, circuit.cs, circuit.assignment);
  std::mt19937_64 rng(67);
  for (int trial = 0; trial < 20; ++trial) {
    ProofBundle mutated = bundle;
    mutated.proof[rng() % mutated.proof.size()] ^= (uint8_t)(1u << (rng() % 8));
    CHECK(!backend->verify(vk, mutated, &circuit.cs));
  }
}

#ifdef ZKWM_HAVE_GROTH16

TEST_CASE("groth16: completeness and interchangeability with the oracle") {
  auto groth = make_groth16_backend();
  auto check = make_check_backend();
  REQUIRE(groth);
  for (auto& circuit : small_matrix(68)) {
    auto [gpk, gvk] = groth->setup(circuit.cs, 7);
    ProofBundle gproof = groth->prove(gpk, circuit.cs, circuit.assignment);
    bool groth_ok = groth->verify(gvk, gproof, nullptr);

    auto [cpk, cvk] = check->setup(circuit.cs, 7);
    ProofBundle cproof = check->prove(cpk, circuit.cs, circuit.assignment);
    bool check_ok = check->verify(cvk, cproof, &circuit.cs);

    CHECK(groth_ok == check_ok);
    CHECK(groth_ok);
  }
}

TEST_CASE("groth16: constant proof size across circuit sizes") {
  auto groth = make_groth16_backend();
  REQUIRE(groth);
  size_t size_small = 0, size_large = 0;
  {
    auto circuit = bench::build_relu(4, kFmt, 69);
    auto [pk, vk] = groth->setup(circuit.cs, 7);
    size_small = groth->prove(pk, circuit.cs, circuit.assignment).proof.size();
  }
  {
    auto circuit = bench::build_matmul(6, kFmt, 70);
    auto [pk, vk] = groth->setup(circuit.cs, 7);
    size_large = groth->prove(pk, circuit.cs, circuit.assignment).proof.size();
  }
  CHECK(size_small == size_large);
  // Same order of magnitude as the BN254 reference encoding (~128 bytes).
  CHECK(size_small >= 96);
  CHECK(size_small <= 512);
}

TEST_CASE("groth16: binding under public-input bit flips") {
  auto groth = make_groth16_backend();
  REQUIRE(groth);
  auto circuit = bench::build_hard_threshold(6, kFmt, 71);
  auto [pk, vk] = groth->setup(circuit.cs, 7);
  ProofBundle bundle = groth->prove(pk, circuit.cs, circuit.assignment);
  REQUIRE(groth->verify(vk, bundle, nullptr));
  std::mt19937_64 rng(72);
  for (int trial = 0; trial < 20; ++trial)
    CHECK(!groth->verify(vk, flip_public_bit(bundle, rng), nullptr));
}

TEST_CASE("groth16: proof replays to a second verifier instance") {
  auto groth = make_groth16_backend();
  REQUIRE(groth);
  auto circuit = bench::build_ber(8, 0.25, kFmt, 73);
  auto [pk, vk] = groth->setup(circuit.cs, 7);
  ProofBundle bundle = groth->prove(pk, circuit.cs, circuit.assignment);
  auto second = make_groth16_backend();
  CHECK(second->verify(vk, bundle, nullptr));
}

#endif  // ZKWM_HAVE_GROTH16
