#include "zkwm/kernels.hpp"

#include <cstdlib>
#include <cstring>

namespace zkwm::kernels {

#if !defined(ZKWM_BUILD_AVX2) || !(defined(__x86_64__) || defined(__i386__))
const Ops* avx2_ops() { return nullptr; }
#endif

namespace {

const Ops* select(const char* name) {
  if (name && std::strcmp(name, "scalar") == 0) return &scalar_ops();
  if (name && std::strcmp(name, "avx2") == 0) return avx2_ops();
  // auto: best available
  if (const Ops* v = avx2_ops()) return v;
  return &scalar_ops();
}

const Ops*& current() {
  static const Ops* ops = select(std::getenv("ZKWM_SIMD"));
  return ops;
}

}  // namespace

const Ops& active() { return *current(); }

bool force_backend(const char* name) {
  const Ops* ops = select(name);
  if (!ops) return false;
  current() = ops;
  return true;
}

}  // namespace zkwm::kernels
