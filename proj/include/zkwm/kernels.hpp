#pragma once

#include <cstddef>

// Data-parallel inner loops of the plaintext runtime. Every backend follows
// the same blocked-summation contract (four independent accumulators over
// contiguous 4-element groups, pairwise reduction, sequential tail, no FMA)
// so results are bit-identical across scalar and SIMD paths.
namespace zkwm::kernels {

struct Ops {
  const char* name;
  double (*dot)(const double* a, const double* b, size_t n);
  void (*axpy)(double alpha, const double* x, double* y, size_t n);  // y += a*x
  void (*scale)(double alpha, double* x, size_t n);                  // x *= a
};

const Ops& scalar_ops();

/// AVX2 backend; nullptr when not compiled in or the CPU lacks AVX2.
const Ops* avx2_ops();

/// Currently selected backend. Honors ZKWM_SIMD={auto,scalar,avx2} at first
/// use; force_backend overrides from code (tests).
const Ops& active();
bool force_backend(const char* name);

inline double dot(const double* a, const double* b, size_t n) {
  return active().dot(a, b, n);
}
inline void axpy(double alpha, const double* x, double* y, size_t n) {
  active().axpy(alpha, x, y, n);
}
inline void scale(double alpha, double* x, size_t n) {
  active().scale(alpha, x, n);
}

}  // namespace zkwm::kernels
