#include "zkwm/kernels.hpp"

namespace zkwm::kernels {
namespace {

double dot_scalar(const double* a, const double* b, size_t n) {
  double acc0 = 0, acc1 = 0, acc2 = 0, acc3 = 0;
  size_t main = n & ~size_t(3);
  for (size_t i = 0; i < main; i += 4) {
    acc0 += a[i] * b[i];
    acc1 += a[i + 1] * b[i + 1];
    acc2 += a[i + 2] * b[i + 2];
    acc3 += a[i + 3] * b[i + 3];
  }
  double sum = (acc0 + acc1) + (acc2 + acc3);
  for (size_t i = main; i < n; ++i) sum += a[i] * b[i];
  return sum;
}

void axpy_scalar(double alpha, const double* x, double* y, size_t n) {
  for (size_t i = 0; i < n; ++i) y[i] = y[i] + alpha * x[i];
}

void scale_scalar(double alpha, double* x, size_t n) {
  for (size_t i = 0; i < n; ++i) x[i] *= alpha;
}

}  // namespace

const Ops& scalar_ops() {
  static const Ops ops = {"scalar", dot_scalar, axpy_scalar, scale_scalar};
  return ops;
}

}  // namespace zkwm::kernels
