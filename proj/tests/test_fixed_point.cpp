#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "zkwm/errors.hpp"
#include "zkwm/fixed_point.hpp"

using namespace zkwm;

namespace {
const FixedPointFormat kFmt;  // f=16, W=48

double random_real(std::mt19937_64& rng, double mag) {
  std::uniform_real_distribution<double> d(-mag, mag);
  return d(rng);
}
}  // namespace

TEST_CASE("encode examples") {
  CHECK(fxp_encode(1.0, kFmt).raw == 65536);
  CHECK(fxp_encode(0.0, kFmt).raw == 0);
  CHECK(fxp_encode(0.2159198015, kFmt).raw == 14151);
  CHECK(fxp_encode(-0.5, kFmt).raw == -32768);
  // Half-away-from-zero at the midpoint.
  CHECK(fxp_encode(std::exp2(-17.0), kFmt).raw == 1);
  CHECK(fxp_encode(-std::exp2(-17.0), kFmt).raw == -1);
}

TEST_CASE("decode examples") {
  CHECK(fxp_decode({65536, kFmt}) == 1.0);
  CHECK(fxp_decode({-32768, kFmt}) == -0.5);
  CHECK(fxp_decode({14151, kFmt}) == doctest::Approx(0.215927124).epsilon(1e-9));
  // decode is exact: 14151 / 65536
  CHECK(fxp_decode({14151, kFmt}) == 14151.0 / 65536.0);
}

TEST_CASE("encode range errors") {
  double limit = std::exp2((double)(kFmt.total_bits - 1 - kFmt.frac_bits));
  CHECK_THROWS_AS(fxp_encode(limit, kFmt), OutOfRangeError);
  CHECK_THROWS_AS(fxp_encode(-limit * 2, kFmt), OutOfRangeError);
  CHECK_NOTHROW(fxp_encode(limit - 1.0, kFmt));
}

TEST_CASE("mul_rescale examples") {
  auto half = fxp_encode(0.5, kFmt);
  CHECK(fxp_mul_rescale(half, half).raw == 16384);  // 0.25 exactly
  auto x = fxp_encode(0.3, kFmt);
  CHECK(x.raw == 19661);
  CHECK(fxp_mul_rescale(x, x).raw == 5898);
  auto neg_x = fxp_encode(-0.3, kFmt);
  CHECK(fxp_mul_rescale(neg_x, x).raw == -5899);  // floor, not trunc-to-zero
  // 1.0 is the multiplicative identity.
  std::mt19937_64 rng(7);
  auto one = fxp_encode(1.0, kFmt);
  for (int i = 0; i < 100; ++i) {
    auto v = fxp_encode(random_real(rng, 1000.0), kFmt);
    CHECK(fxp_mul_rescale(one, v).raw == v.raw);
  }
}

TEST_CASE("addition is exact, overflow detected") {
  std::mt19937_64 rng(8);
  for (int i = 0; i < 1000; ++i) {
    double a = random_real(rng, 1e5), b = random_real(rng, 1e5);
    auto ea = fxp_encode(a, kFmt), eb = fxp_encode(b, kFmt);
    CHECK(fxp_decode(fxp_add(ea, eb)) == fxp_decode(ea) + fxp_decode(eb));
  }
  FixedPointValue top{kFmt.max_raw(), kFmt};
  CHECK_THROWS_AS(fxp_add(top, {1, kFmt}), OverflowError);
}

TEST_CASE("mul_rescale error bound") {
  std::mt19937_64 rng(9);
  double ulp = std::exp2(-(double)kFmt.frac_bits);
  for (int i = 0; i < 2000; ++i) {
    double a = random_real(rng, 100.0), b = random_real(rng, 100.0);
    auto prod = fxp_mul_rescale(fxp_encode(a, kFmt), fxp_encode(b, kFmt));
    double bound = ulp + std::abs(a) * ulp / 2 + std::abs(b) * ulp / 2;
    CHECK(std::abs(fxp_decode(prod) - a * b) <= bound);
  }
}

TEST_CASE("field embedding round-trip over the whole signed range") {
  std::mt19937_64 rng(10);
  for (int i = 0; i < 2000; ++i) {
    int64_t raw = (int64_t)(rng() % (1ull << kFmt.total_bits)) + kFmt.min_raw();
    if (!kFmt.raw_in_range(raw)) continue;
    FixedPointValue v{raw, kFmt};
    CHECK(fxp_from_field(fxp_to_field(v), kFmt).raw == raw);
  }
  CHECK(fxp_from_field(fxp_to_field({kFmt.min_raw(), kFmt}), kFmt).raw ==
        kFmt.min_raw());
  CHECK(fxp_from_field(fxp_to_field({kFmt.max_raw(), kFmt}), kFmt).raw ==
        kFmt.max_raw());
}

TEST_CASE("determinism across repeated encodes") {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 500; ++i) {
    double x = random_real(rng, 1e4);
    CHECK(fxp_encode(x, kFmt).raw == fxp_encode(x, kFmt).raw);
  }
}

TEST_CASE("format width constraint") {
  CHECK(kFmt.supports_inner_dim(1 << 20));
  FixedPointFormat wide{120, 126};
  CHECK(!wide.supports_inner_dim(1ull << 10));
}

TEST_CASE("floor_div_pow2 rounds toward negative infinity") {
  CHECK(floor_div_pow2(7, 1) == 3);
  CHECK(floor_div_pow2(-7, 1) == -4);
  CHECK(floor_div_pow2(-65536, 16) == -1);
  CHECK(floor_div_pow2(-65537, 16) == -2);
}
