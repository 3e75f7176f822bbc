#include "zkwm/kernels.hpp"

#if defined(ZKWM_BUILD_AVX2) && (defined(__x86_64__) || defined(__i386__))
#include <immintrin.h>

namespace zkwm::kernels {
namespace {

double dot_avx2(const double* a, const double* b, size_t n) {
  __m256d acc = _mm256_setzero_pd();
  size_t main = n & ~size_t(3);
  for (size_t i = 0; i < main; i += 4) {
    __m256d va = _mm256_loadu_pd(a + i);
    __m256d vb = _mm256_loadu_pd(b + i);
    // mul+add, not FMA: keeps rounding identical to the scalar reference
    acc = _mm256_add_pd(acc, _mm256_mul_pd(va, vb));
  }
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, acc);
  double sum = (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
  for (size_t i = main; i < n; ++i) sum += a[i] * b[i];
  return sum;
}

void axpy_avx2(double alpha, const double* x, double* y, size_t n) {
  __m256d va = _mm256_set1_pd(alpha);
  size_t main = n & ~size_t(3);
  for (size_t i = 0; i < main; i += 4) {
    __m256d vy = _mm256_loadu_pd(y + i);
    __m256d vx = _mm256_loadu_pd(x + i);
    _mm256_storeu_pd(y + i, _mm256_add_pd(vy, _mm256_mul_pd(va, vx)));
  }
  for (size_t i = main; i < n; ++i) y[i] = y[i] + alpha * x[i];
}

void scale_avx2(double alpha, double* x, size_t n) {
  __m256d va = _mm256_set1_pd(alpha);
  size_t main = n & ~size_t(3);
  for (size_t i = 0; i < main; i += 4)
    _mm256_storeu_pd(x + i, _mm256_mul_pd(va, _mm256_loadu_pd(x + i)));
  for (size_t i = main; i < n; ++i) x[i] *= alpha;
}

}  // namespace

const Ops* avx2_ops() {
  if (!__builtin_cpu_supports("avx2")) return nullptr;
  static const Ops ops = {"avx2", dot_avx2, axpy_avx2, scale_avx2};
  return &ops;
}

}  // namespace zkwm::kernels

#endif
