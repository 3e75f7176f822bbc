#pragma once

#include <cstdint>
#include <string>

#include "zkwm/fixed_point.hpp"
#include "zkwm/r1cs.hpp"

// Standalone gadget circuits, each with seeded private inputs and public
// outputs: the per-circuit benchmark surface, also reused as the backend
// test matrix.
namespace zkwm::bench {

struct GadgetCircuit {
  std::string name;
  ConstraintSystem cs;
  Assignment assignment;
};

GadgetCircuit build_matmul(uint32_t n, FixedPointFormat fmt, uint64_t seed);
GadgetCircuit build_conv3d(uint32_t h, uint32_t w, uint32_t c,
                           uint32_t out_channels, uint32_t kernel,
                           uint32_t stride, FixedPointFormat fmt, uint64_t seed);
GadgetCircuit build_relu(uint32_t n, FixedPointFormat fmt, uint64_t seed);
GadgetCircuit build_sigmoid(uint32_t n, FixedPointFormat fmt, uint64_t seed);
GadgetCircuit build_hard_threshold(uint32_t n, FixedPointFormat fmt,
                                   uint64_t seed);
GadgetCircuit build_average(uint32_t batch, uint32_t width,
                            FixedPointFormat fmt, uint64_t seed);
GadgetCircuit build_ber(uint32_t bits, double theta, FixedPointFormat fmt,
                        uint64_t seed);

}  // namespace zkwm::bench
