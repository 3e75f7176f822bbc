#include "zkwm/bench_circuits.hpp"

#include <cmath>
#include <random>

#include "zkwm/gadgets.hpp"

namespace zkwm::bench {
namespace {

using gadgets::BitVar;
using gadgets::FxpMatrix;
using gadgets::FxpTensor3;
using gadgets::FxpVar;

FxpVar private_input(CircuitBuilder& b, double value, FixedPointFormat fmt) {
  return {b.alloc_private(fxp_to_field(fxp_encode(value, fmt))), fmt};
}

std::vector<FxpVar> private_vector(CircuitBuilder& b, size_t n,
                                   FixedPointFormat fmt, std::mt19937_64& rng,
                                   double mag) {
  std::uniform_real_distribution<double> d(-mag, mag);
  std::vector<FxpVar> out;
  out.reserve(n);
  for (size_t i = 0; i < n; ++i) out.push_back(private_input(b, d(rng), fmt));
  return out;
}

// Expose a computed value on a fresh public variable.
void publish(CircuitBuilder& b, Variable v) {
  Variable out = b.alloc_public(b.witness_mode() ? b.value(v) : FieldScalar());
  b.enforce(LinearCombination(out) - LinearCombination(v),
            LinearCombination::constant(FieldScalar::one()),
            LinearCombination());
}

GadgetCircuit finish(const std::string& name, CircuitBuilder&& b) {
  auto [cs, assignment] = std::move(b).finalize();
  return {name, std::move(cs), std::move(assignment)};
}

}  // namespace

GadgetCircuit build_matmul(uint32_t n, FixedPointFormat fmt, uint64_t seed) {
  CircuitBuilder b(CircuitBuilder::Mode::kWitness);
  std::mt19937_64 rng(seed);
  FxpMatrix a{n, n, private_vector(b, (size_t)n * n, fmt, rng, 1.5)};
  FxpMatrix x{n, n, private_vector(b, (size_t)n * n, fmt, rng, 1.5)};
  FxpMatrix c = gadgets::matmul(b, a, x);
  for (const FxpVar& v : c.vars) publish(b, v.var);
  return finish("matmul" + std::to_string(n), std::move(b));
}

GadgetCircuit build_conv3d(uint32_t h, uint32_t w, uint32_t c,
                           uint32_t out_channels, uint32_t kernel,
                           uint32_t stride, FixedPointFormat fmt,
                           uint64_t seed) {
  CircuitBuilder b(CircuitBuilder::Mode::kWitness);
  std::mt19937_64 rng(seed);
  FxpTensor3 input{h, w, c, private_vector(b, (size_t)h * w * c, fmt, rng, 1.0)};
  auto kernels = private_vector(
      b, (size_t)kernel * kernel * c * out_channels, fmt, rng, 1.0);
  FxpTensor3 out =
      gadgets::conv3d(b, input, kernels, out_channels, kernel, stride);
  for (const FxpVar& v : out.vars) publish(b, v.var);
  return finish("conv3d", std::move(b));
}

GadgetCircuit build_relu(uint32_t n, FixedPointFormat fmt, uint64_t seed) {
  CircuitBuilder b(CircuitBuilder::Mode::kWitness);
  std::mt19937_64 rng(seed);
  for (const FxpVar& v : private_vector(b, n, fmt, rng, 4.0))
    publish(b, gadgets::relu(b, v).var);
  return finish("relu" + std::to_string(n), std::move(b));
}

GadgetCircuit build_sigmoid(uint32_t n, FixedPointFormat fmt, uint64_t seed) {
  CircuitBuilder b(CircuitBuilder::Mode::kWitness);
  std::mt19937_64 rng(seed);
  for (const FxpVar& v : private_vector(b, n, fmt, rng, 5.0))
    publish(b, gadgets::sigmoid(b, v).var);
  return finish("sigmoid" + std::to_string(n), std::move(b));
}

GadgetCircuit build_hard_threshold(uint32_t n, FixedPointFormat fmt,
                                   uint64_t seed) {
  CircuitBuilder b(CircuitBuilder::Mode::kWitness);
  std::mt19937_64 rng(seed);
  for (const FxpVar& v : private_vector(b, n, fmt, rng, 2.0))
    publish(b, gadgets::hard_threshold(b, v, 0.5).var);
  return finish("hard_threshold" + std::to_string(n), std::move(b));
}

GadgetCircuit build_average(uint32_t batch, uint32_t width,
                            FixedPointFormat fmt, uint64_t seed) {
  CircuitBuilder b(CircuitBuilder::Mode::kWitness);
  std::mt19937_64 rng(seed);
  std::vector<std::vector<FxpVar>> rows;
  for (uint32_t i = 0; i < batch; ++i)
    rows.push_back(private_vector(b, width, fmt, rng, 2.0));
  for (const FxpVar& v : gadgets::average(b, rows)) publish(b, v.var);
  return finish("average" + std::to_string(batch) + "x" + std::to_string(width),
                std::move(b));
}

GadgetCircuit build_ber(uint32_t bits, double theta, FixedPointFormat fmt,
                        uint64_t seed) {
  (void)fmt;
  CircuitBuilder b(CircuitBuilder::Mode::kWitness);
  std::mt19937_64 rng(seed);
  std::vector<BitVar> wm, wm_hat;
  for (uint32_t i = 0; i < bits; ++i) {
    bool bit = rng() & 1;
    wm.push_back(gadgets::alloc_bit(b, bit));
    // Flip a few bits so the check is exercised on both sides.
    wm_hat.push_back(gadgets::alloc_bit(b, (rng() % 16 == 0) ? !bit : bit));
  }
  uint64_t t = (uint64_t)std::floor(theta * (double)bits);
  publish(b, gadgets::ber_check(b, wm, wm_hat, t).var);
  return finish("ber" + std::to_string(bits), std::move(b));
}

}  // namespace zkwm::bench
