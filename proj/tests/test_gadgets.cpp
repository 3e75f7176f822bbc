#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "gadget_harness.hpp"
#include "zkwm/errors.hpp"
#include "zkwm/fxp_extract.hpp"

using namespace zkwm;
using namespace harness;

namespace {
const FixedPointFormat kFmt;  // f=16, W=48
}

TEST_CASE("range_check boundary behaviour") {
  // x = 0 with n = 8 decomposes to the offset pattern 10000000.
  auto built = build([](CircuitBuilder& b) {
    auto x = input(b, 0, kFmt);
    auto bits = gadgets::range_check_signed(b, x.var, 8);
    std::vector<Variable> vars;
    for (auto& bit : bits) vars.push_back(bit.var);
    return vars;
  });
  CHECK(built.cs.is_satisfied(built.assignment).ok);
  for (int i = 0; i < 7; ++i) CHECK(raw_of(built, built.outputs[i]) == 0);
  CHECK(raw_of(built, built.outputs[7]) == 1);

  // Lower boundary: all-zero bits.
  auto low = build([](CircuitBuilder& b) {
    auto x = input(b, -128, kFmt);
    auto bits = gadgets::range_check_signed(b, x.var, 8);
    std::vector<Variable> vars;
    for (auto& bit : bits) vars.push_back(bit.var);
    return vars;
  });
  CHECK(low.cs.is_satisfied(low.assignment).ok);
  for (auto v : low.outputs) CHECK(raw_of(low, v) == 0);

  // Exclusive upper bound: no valid witness exists.
  auto high = build([](CircuitBuilder& b) {
    auto x = input(b, 128, kFmt);
    gadgets::range_check_signed(b, x.var, 8);
    return std::vector<Variable>{};
  });
  auto r = high.cs.is_satisfied(high.assignment);
  CHECK(!r.ok);

  // Cost: n booleanity constraints plus the recomposition sum.
  auto counted = build([](CircuitBuilder& b) {
    auto x = input(b, 5, kFmt);
    gadgets::range_check_signed(b, x.var, 16);
    return std::vector<Variable>{};
  });
  CHECK(counted.cs.stats().num_constraints == 17);
}

TEST_CASE("is_nonneg at and around zero") {
  auto probe = [](int64_t raw) {
    auto built = build([raw](CircuitBuilder& b) {
      auto x = input(b, raw, kFmt);
      return std::vector<Variable>{
          gadgets::is_nonneg(b, x.var, kFmt.total_bits).var};
    });
    REQUIRE(built.cs.is_satisfied(built.assignment).ok);
    return raw_of(built, built.outputs[0]);
  };
  CHECK(probe(0) == 1);
  CHECK(probe(-1) == 0);
  CHECK(probe(fxp_encode(3.7, kFmt).raw) == 1);
  CHECK(probe(kFmt.min_raw()) == 0);
  CHECK(probe(kFmt.max_raw()) == 1);
}

TEST_CASE("rescale matches fxp_mul_rescale bit for bit") {
  auto rescale_of = [](int64_t a, int64_t c) {
    auto built = build([&](CircuitBuilder& b) {
      auto va = input(b, a, kFmt);
      auto vc = input(b, c, kFmt);
      LinearCombination wide(gadgets::mul_wide(b, va, vc));
      auto out = gadgets::rescale(b, wide, kFmt,
                                  gadgets::product_sum_bits(kFmt, 1));
      return std::vector<Variable>{out.var};
    });
    REQUIRE(built.cs.is_satisfied(built.assignment).ok);
    return raw_of(built, built.outputs[0]);
  };
  int64_t half = fxp_encode(0.5, kFmt).raw;
  int64_t three = fxp_encode(0.3, kFmt).raw;
  CHECK(rescale_of(half, half) == fxp_encode(0.25, kFmt).raw);
  CHECK(rescale_of(three, three) == 5898);
  CHECK(rescale_of(-three, three) == -5899);  // floor toward -infinity

  std::mt19937_64 rng(21);
  for (int i = 0; i < 300; ++i) {
    auto raws = random_raws(rng, 2, kFmt, 100.0);
    int64_t expect =
        fxp_mul_rescale({raws[0], kFmt}, {raws[1], kFmt}).raw;
    CHECK(rescale_of(raws[0], raws[1]) == expect);
  }
}

TEST_CASE("matmul identities and oracle equivalence") {
  auto run_matmul = [](const std::vector<int64_t>& a, uint32_t m, uint32_t n,
                       const std::vector<int64_t>& bm, uint32_t l) {
    auto built = build([&](CircuitBuilder& b) {
      gadgets::FxpMatrix A{m, n, inputs(b, a, kFmt)};
      gadgets::FxpMatrix B{n, l, inputs(b, bm, kFmt)};
      auto C = gadgets::matmul(b, A, B);
      std::vector<Variable> vars;
      for (auto& v : C.vars) vars.push_back(v.var);
      return vars;
    });
    REQUIRE(built.cs.is_satisfied(built.assignment).ok);
    std::vector<int64_t> out;
    for (auto v : built.outputs) out.push_back(raw_of(built, v));
    return out;
  };

  int64_t one = fxp_encode(1.0, kFmt).raw;
  // Identity times B.
  std::mt19937_64 rng(22);
  auto bvals = random_raws(rng, 6, kFmt, 10.0);
  std::vector<int64_t> eye = {one, 0, 0, one};
  CHECK(run_matmul(eye, 2, 2, bvals, 3) == bvals);

  // Integer-valued entries are exact: [[1,2],[3,4]] x [[5,6],[7,8]].
  auto enc = [&](double v) { return fxp_encode(v, kFmt).raw; };
  std::vector<int64_t> a = {enc(1), enc(2), enc(3), enc(4)};
  std::vector<int64_t> c = {enc(5), enc(6), enc(7), enc(8)};
  std::vector<int64_t> expect = {enc(19), enc(22), enc(43), enc(50)};
  CHECK(run_matmul(a, 2, 2, c, 2) == expect);

  // 1x1 reduces to fxp_mul_rescale.
  auto raws = random_raws(rng, 2, kFmt, 50.0);
  CHECK(run_matmul({raws[0]}, 1, 1, {raws[1]}, 1)[0] ==
        fxp_mul_rescale({raws[0], kFmt}, {raws[1], kFmt}).raw);

  // Random shapes against the fixed-point oracle.
  for (int iter = 0; iter < 50; ++iter) {
    uint32_t m = 1 + rng() % 4, n = 1 + rng() % 5, l = 1 + rng() % 4;
    auto av = random_raws(rng, (size_t)m * n, kFmt, 20.0);
    auto bv = random_raws(rng, (size_t)n * l, kFmt, 20.0);
    CHECK(run_matmul(av, m, n, bv, l) == fxp::matmul(av, m, n, bv, l, kFmt));
  }
}

TEST_CASE("conv3d against the sliding-window oracle") {
  std::mt19937_64 rng(23);
  auto run_conv = [](const std::vector<int64_t>& in, uint32_t h, uint32_t w,
                     uint32_t c, const std::vector<int64_t>& k, uint32_t K,
                     uint32_t kern, uint32_t stride) {
    auto built = build([&](CircuitBuilder& b) {
      gadgets::FxpTensor3 t{h, w, c, inputs(b, in, kFmt)};
      auto out = gadgets::conv3d(b, t, inputs(b, k, kFmt), K, kern, stride);
      std::vector<Variable> vars;
      for (auto& v : out.vars) vars.push_back(v.var);
      return vars;
    });
    REQUIRE(built.cs.is_satisfied(built.assignment).ok);
    std::vector<int64_t> out;
    for (auto v : built.outputs) out.push_back(raw_of(built, v));
    return out;
  };

  // All-zero kernel -> all-zero output.
  auto in = random_raws(rng, 4 * 4 * 2, kFmt, 3.0);
  std::vector<int64_t> zeros(3 * 3 * 2 * 2, 0);
  for (int64_t v : run_conv(in, 4, 4, 2, zeros, 2, 3, 1)) CHECK(v == 0);

  // 1x1xC one-hot kernel selects a channel.
  std::vector<int64_t> onehot = {0, fxp_encode(1.0, kFmt).raw};
  auto selected = run_conv(in, 4, 4, 2, onehot, 1, 1, 1);
  for (size_t i = 0; i < selected.size(); ++i) CHECK(selected[i] == in[i * 2 + 1]);

  // 4x4x1 input, 3x3x1 kernel, stride 1: brute-force nested loops.
  auto img = random_raws(rng, 16, kFmt, 2.0);
  auto ker = random_raws(rng, 9, kFmt, 2.0);
  auto got = run_conv(img, 4, 4, 1, ker, 1, 3, 1);
  REQUIRE(got.size() == 4);
  for (uint32_t i = 0; i < 2; ++i)
    for (uint32_t j = 0; j < 2; ++j) {
      __int128 acc = 0;
      for (uint32_t di = 0; di < 3; ++di)
        for (uint32_t dj = 0; dj < 3; ++dj)
          acc += (__int128)img[(i + di) * 4 + (j + dj)] * ker[di * 3 + dj];
      CHECK(got[i * 2 + j] == (int64_t)floor_div_pow2(acc, kFmt.frac_bits));
    }

  // Oracle equivalence on the paper's shape at reduced channel count.
  auto big_in = random_raws(rng, 8 * 8 * 3, kFmt, 1.0);
  auto big_k = random_raws(rng, 3 * 3 * 3 * 4, kFmt, 1.0);
  CHECK(run_conv(big_in, 8, 8, 3, big_k, 4, 3, 2) ==
        fxp::conv3d(big_in, 8, 8, 3, big_k, {}, 4, 3, 2, kFmt));

  // Kernel larger than input is rejected.
  CHECK_THROWS_AS(run_conv(img, 4, 4, 1, random_raws(rng, 25, kFmt, 1.0), 1, 5, 1),
                  ShapeMismatchError);
}

TEST_CASE("relu examples and oracle") {
  auto run_relu = [](int64_t raw) {
    auto built = build([&](CircuitBuilder& b) {
      auto out = gadgets::relu(b, input(b, raw, kFmt));
      return std::vector<Variable>{out.var};
    });
    REQUIRE(built.cs.is_satisfied(built.assignment).ok);
    return raw_of(built, built.outputs[0]);
  };
  CHECK(run_relu(fxp_encode(5.0, kFmt).raw) == fxp_encode(5.0, kFmt).raw);
  CHECK(run_relu(fxp_encode(-3.0, kFmt).raw) == 0);
  CHECK(run_relu(0) == 0);
  std::mt19937_64 rng(24);
  for (int i = 0; i < 200; ++i) {
    int64_t raw = random_raws(rng, 1, kFmt, 1000.0)[0];
    CHECK(run_relu(raw) == fxp::relu(raw));
  }
}

TEST_CASE("hard threshold at the boundary") {
  auto run_thresh = [](int64_t raw, double beta) {
    auto built = build([&](CircuitBuilder& b) {
      auto bit = gadgets::hard_threshold(b, input(b, raw, kFmt), beta);
      return std::vector<Variable>{bit.var};
    });
    REQUIRE(built.cs.is_satisfied(built.assignment).ok);
    return raw_of(built, built.outputs[0]);
  };
  int64_t half = fxp_encode(0.5, kFmt).raw;
  CHECK(run_thresh(half, 0.5) == 1);      // 1 if x >= beta
  CHECK(run_thresh(half - 1, 0.5) == 0);  // one ulp below
  CHECK(run_thresh(fxp_encode(0.9, kFmt).raw, 0.5) == 1);
  std::mt19937_64 rng(25);
  for (int i = 0; i < 200; ++i) {
    int64_t raw = random_raws(rng, 1, kFmt, 2.0)[0];
    CHECK(run_thresh(raw, 0.5) == (fxp::hard_threshold(raw, half) ? 1 : 0));
  }
}

TEST_CASE("sigmoid gadget: exact values, oracle equivalence, symmetry") {
  auto run_sigmoid = [](int64_t raw) {
    auto built = build([&](CircuitBuilder& b) {
      auto out = gadgets::sigmoid(b, input(b, raw, kFmt));
      return std::vector<Variable>{out.var};
    });
    REQUIRE(built.cs.is_satisfied(built.assignment).ok);
    return raw_of(built, built.outputs[0]);
  };

  CHECK(run_sigmoid(0) == fxp_encode(0.5, kFmt).raw);  // exactly 0.5

  // x = 1: the exact degree-9 polynomial gives 0.7078828577.
  int64_t at_one = run_sigmoid(fxp_encode(1.0, kFmt).raw);
  CHECK(at_one == fxp::sigmoid_poly(fxp_encode(1.0, kFmt).raw, kFmt));
  CHECK(std::abs(fxp_decode({at_one, kFmt}) - 0.7078828577) < 1e-4);

  std::mt19937_64 rng(26);
  for (int i = 0; i < 200; ++i) {
    int64_t raw = random_raws(rng, 1, kFmt, 5.0)[0];
    CHECK(run_sigmoid(raw) == fxp::sigmoid_poly(raw, kFmt));
  }

  // Odd symmetry: sigmoid(x) + sigmoid(-x) = 1 within 2 ulp.
  int64_t one_enc = fxp_encode(1.0, kFmt).raw;
  for (int i = 0; i < 400; ++i) {
    int64_t raw = random_raws(rng, 1, kFmt, 5.0)[0];
    int64_t sum = fxp::sigmoid_poly(raw, kFmt) + fxp::sigmoid_poly(-raw, kFmt);
    CHECK(std::abs(sum - one_enc) <= 2);
  }
}

TEST_CASE("sigmoid polynomial approximation error is pinned") {
  // Max |poly - sigmoid| over 10001 uniform points on [-5, 5], evaluated in
  // extended precision; pinned after the first oracle computation.
  const long double kPinnedEmax = 0.023395636752303126641L;
  long double worst = 0.0L;
  for (int i = 0; i <= 10000; ++i) {
    long double x = -5.0L + 10.0L * i / 10000.0L;
    long double y = x * x;
    long double t = 0.0000000072L;
    t = t * y - 0.0000018848L;
    t = t * y + 0.0001825597L;
    t = t * y - 0.0082176259L;
    t = t * y + 0.2159198015L;
    long double poly = 0.5L + x * t;
    long double sig = 1.0L / (1.0L + std::exp(-(double)x));
    worst = std::max(worst, std::abs(poly - sig));
  }
  CHECK(std::abs(worst - kPinnedEmax) < 1e-12L);
}

TEST_CASE("average: identity, basis vectors, reciprocal rounding") {
  auto run_average = [](const std::vector<std::vector<int64_t>>& batch) {
    auto built = build([&](CircuitBuilder& b) {
      std::vector<std::vector<gadgets::FxpVar>> rows;
      for (const auto& row : batch) rows.push_back(inputs(b, row, kFmt));
      auto out = gadgets::average(b, rows);
      std::vector<Variable> vars;
      for (auto& v : out) vars.push_back(v.var);
      return vars;
    });
    REQUIRE(built.cs.is_satisfied(built.assignment).ok);
    std::vector<int64_t> out;
    for (auto v : built.outputs) out.push_back(raw_of(built, v));
    return out;
  };

  std::mt19937_64 rng(27);
  auto vec = random_raws(rng, 6, kFmt, 10.0);
  // K = 1 is exact: encode(1) = 2^f.
  CHECK(run_average({vec}) == vec);
  // K identical vectors, K a power of two: exact.
  CHECK(run_average({vec, vec, vec, vec}) == vec);
  // K = 3 identical vectors: within 1 ulp per component.
  auto near = run_average({vec, vec, vec});
  for (size_t i = 0; i < vec.size(); ++i) {
    double err = std::abs(fxp_decode({near[i], kFmt}) - fxp_decode({vec[i], kFmt}));
    CHECK(err <= fxp_decode({vec[i] == 0 ? 1 : std::abs(vec[i]), kFmt}) *
                     std::exp2(-16.0) +
                 std::exp2(-16.0));
  }
  // Unit basis vectors average to (0.5, 0.5, 0, ...).
  int64_t one = fxp_encode(1.0, kFmt).raw;
  std::vector<int64_t> e1 = {one, 0, 0}, e2 = {0, one, 0};
  auto mid = run_average({e1, e2});
  CHECK(mid[0] == fxp_encode(0.5, kFmt).raw);
  CHECK(mid[1] == fxp_encode(0.5, kFmt).raw);
  CHECK(mid[2] == 0);
  // Oracle equivalence.
  for (int iter = 0; iter < 50; ++iter) {
    size_t k = 1 + rng() % 6, m = 1 + rng() % 5;
    std::vector<std::vector<int64_t>> batch;
    for (size_t i = 0; i < k; ++i) batch.push_back(random_raws(rng, m, kFmt, 30.0));
    CHECK(run_average(batch) ==
          fxp::average(std::span<const std::vector<int64_t>>(batch), kFmt));
  }
  CHECK_THROWS_AS(run_average({}), ShapeMismatchError);
}

TEST_CASE("ber_check thresholds and monotonicity") {
  auto run_ber = [](const std::vector<uint8_t>& wm,
                    const std::vector<uint8_t>& hat, uint64_t t) {
    auto built = build([&](CircuitBuilder& b) {
      std::vector<gadgets::BitVar> w, h;
      for (uint8_t bit : wm) w.push_back(gadgets::alloc_bit(b, bit));
      for (uint8_t bit : hat) h.push_back(gadgets::alloc_bit(b, bit));
      return std::vector<Variable>{gadgets::ber_check(b, w, h, t).var};
    });
    REQUIRE(built.cs.is_satisfied(built.assignment).ok);
    return raw_of(built, built.outputs[0]);
  };

  std::mt19937_64 rng(28);
  std::vector<uint8_t> wm(32);
  for (auto& bit : wm) bit = rng() & 1;
  // Identical strings accepted at theta = 0.
  CHECK(run_ber(wm, wm, 0) == 1);
  // One flip rejected at theta = 0.
  auto flipped = wm;
  flipped[7] ^= 1;
  CHECK(run_ber(wm, flipped, 0) == 0);
  // theta = 0.1 over 32 bits: T = 3.
  auto with_flips = [&](size_t n) {
    auto h = wm;
    for (size_t i = 0; i < n; ++i) h[i] ^= 1;
    return h;
  };
  CHECK(run_ber(wm, with_flips(3), 3) == 1);
  CHECK(run_ber(wm, with_flips(4), 3) == 0);

  // Monotonicity: adding flips never turns reject into accept.
  for (int iter = 0; iter < 30; ++iter) {
    size_t fa = rng() % 33;
    size_t fb = fa + rng() % (33 - fa);
    uint64_t t = rng() % 8;
    int va = run_ber(wm, with_flips(fa), t);
    int vb = run_ber(wm, with_flips(fb), t);
    CHECK(va >= vb);
  }
}

TEST_CASE("soundness: +1 perturbation of gadget outputs breaks the system") {
  std::mt19937_64 rng(29);
  // matmul outputs
  {
    auto av = random_raws(rng, 4, kFmt, 5.0);
    auto bv = random_raws(rng, 4, kFmt, 5.0);
    auto built = build([&](CircuitBuilder& b) {
      gadgets::FxpMatrix A{2, 2, inputs(b, av, kFmt)};
      gadgets::FxpMatrix B{2, 2, inputs(b, bv, kFmt)};
      auto C = gadgets::matmul(b, A, B);
      std::vector<Variable> vars;
      for (auto& v : C.vars) vars.push_back(v.var);
      return vars;
    });
    REQUIRE(built.cs.is_satisfied(built.assignment).ok);
    for (auto v : built.outputs) CHECK(perturbation_breaks(built, v));
  }
  // sigmoid output
  {
    auto built = build([&](CircuitBuilder& b) {
      auto out = gadgets::sigmoid(b, input(b, random_raws(rng, 1, kFmt, 4.0)[0], kFmt));
      return std::vector<Variable>{out.var};
    });
    REQUIRE(built.cs.is_satisfied(built.assignment).ok);
    CHECK(perturbation_breaks(built, built.outputs[0]));
  }
  // every private witness variable of a small mixed circuit (locality of
  // violation: nothing is unused)
  {
    auto built = build([&](CircuitBuilder& b) {
      auto x = inputs(b, random_raws(rng, 3, kFmt, 2.0), kFmt);
      auto y = inputs(b, random_raws(rng, 3, kFmt, 2.0), kFmt);
      auto ip = gadgets::inner_product(b, x, y);
      auto r = gadgets::relu(b, ip);
      auto s = gadgets::sigmoid(b, r);
      auto bit = gadgets::hard_threshold(b, s, 0.5);
      return std::vector<Variable>{bit.var};
    });
    REQUIRE(built.cs.is_satisfied(built.assignment).ok);
    CHECK(built.cs.unused_variables().empty());
    for (uint32_t i = 0; i < built.assignment.private_values.size(); ++i)
      CHECK(perturbation_breaks(built, Variable{Visibility::kPrivate, i}));
  }
}

TEST_CASE("inner product dimension guard") {
  CHECK_THROWS_AS(
      build([](CircuitBuilder& b) {
        auto a = inputs(b, {1, 2}, kFmt);
        auto x = inputs(b, {1}, kFmt);
        gadgets::inner_product(b, a, x);
        return std::vector<Variable>{};
      }),
      ShapeMismatchError);
}
