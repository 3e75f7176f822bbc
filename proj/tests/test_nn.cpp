#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "zkwm/errors.hpp"
#include "zkwm/nn.hpp"

using namespace zkwm;

namespace {

ModelSpec mlp_spec(uint32_t in, std::vector<uint32_t> hidden, uint32_t out) {
  ModelSpec spec;
  spec.input_shape = {1, 1, in};
  for (uint32_t h : hidden) {
    spec.layers.push_back(DenseLayer{h});
    spec.layers.push_back(ReluLayer{});
  }
  spec.layers.push_back(DenseLayer{out});
  return spec;
}

// Independent nested-loop forward pass (no shared kernels).
std::vector<double> brute_force_mlp(const ModelSpec& spec,
                                    const ModelWeights& w,
                                    const std::vector<double>& x) {
  std::vector<double> act = x;
  for (size_t li = 0; li < spec.layers.size(); ++li) {
    if (const auto* dense = std::get_if<DenseLayer>(&spec.layers[li])) {
      std::vector<double> next(dense->out_features, 0.0);
      for (uint32_t o = 0; o < dense->out_features; ++o) {
        double acc = w.layers[li].bias[o];
        for (size_t i = 0; i < act.size(); ++i)
          acc += w.layers[li].weight[o * act.size() + i] * act[i];
        next[o] = acc;
      }
      act = std::move(next);
    } else if (std::holds_alternative<ReluLayer>(spec.layers[li])) {
      for (double& v : act) v = std::max(0.0, v);
    }
  }
  return act;
}

bool weights_equal(const ModelWeights& a, const ModelWeights& b) {
  if (a.layers.size() != b.layers.size()) return false;
  for (size_t i = 0; i < a.layers.size(); ++i)
    if (a.layers[i].weight != b.layers[i].weight ||
        a.layers[i].bias != b.layers[i].bias)
      return false;
  return true;
}

}  // namespace

TEST_CASE("shape chaining validates and rejects") {
  ModelSpec spec = mlp_spec(8, {4}, 2);
  auto shapes = spec.activation_shapes();
  REQUIRE(shapes.size() == 3);
  CHECK(shapes[0].size() == 4);
  CHECK(shapes[2].size() == 2);

  ModelSpec conv;
  conv.input_shape = {8, 8, 3};
  conv.layers = {Conv3DLayer{4, 3, 2}, ReluLayer{}, MaxPoolLayer{2, 1},
                 DenseLayer{5}};
  auto cshapes = conv.activation_shapes();
  CHECK(cshapes[0].h == 3);
  CHECK(cshapes[0].c == 4);
  CHECK(cshapes[2].h == 2);

  ModelSpec bad;
  bad.input_shape = {2, 2, 1};
  bad.layers = {Conv3DLayer{4, 3, 1}};  // kernel larger than input
  CHECK_THROWS_AS(bad.activation_shapes(), ShapeMismatchError);
}

TEST_CASE("infer matches the brute-force oracle") {
  ModelSpec spec = mlp_spec(16, {12, 8}, 4);
  ModelWeights w = init_weights(spec, 77);
  std::mt19937_64 rng(78);
  std::uniform_real_distribution<double> d(-2.0, 2.0);
  for (int iter = 0; iter < 50; ++iter) {
    Tensor x;
    x.shape = spec.input_shape;
    x.data.resize(16);
    for (double& v : x.data) v = d(rng);
    auto expect = brute_force_mlp(spec, w, x.data);
    auto got = predict(spec, w, x);
    REQUIRE(got.size() == expect.size());
    for (size_t i = 0; i < got.size(); ++i)
      CHECK(std::abs(got[i] - expect[i]) <=
            1e-9 * std::max(1.0, std::abs(expect[i])));
  }
}

TEST_CASE("zero weights give zero activations after relu") {
  ModelSpec spec = mlp_spec(6, {4}, 3);
  ModelWeights w;
  w.layers.resize(3);
  w.layers[0].weight.assign(24, 0.0);
  w.layers[0].bias.assign(4, 0.0);
  w.layers[2].weight.assign(12, 0.0);
  w.layers[2].bias.assign(3, 0.0);
  Tensor x;
  x.shape = spec.input_shape;
  x.data = {1, -2, 3, -4, 5, -6};
  auto acts = infer(spec, w, x);
  for (double v : acts[1].data) CHECK(v == 0.0);
  for (double v : acts[2].data) CHECK(v == 0.0);
}

TEST_CASE("identity dense plus relu keeps nonnegative input") {
  ModelSpec spec;
  spec.input_shape = {1, 1, 4};
  spec.layers = {DenseLayer{4}, ReluLayer{}};
  ModelWeights w;
  w.layers.resize(2);
  w.layers[0].weight.assign(16, 0.0);
  for (int i = 0; i < 4; ++i) w.layers[0].weight[i * 4 + i] = 1.0;
  w.layers[0].bias.assign(4, 0.0);
  Tensor x;
  x.shape = spec.input_shape;
  x.data = {0.5, 0.0, 2.5, 1.25};
  auto acts = infer(spec, w, x);
  CHECK(acts[1].data == x.data);
}

TEST_CASE("maxpool and conv layers forward correctly") {
  ModelSpec spec;
  spec.input_shape = {4, 4, 1};
  spec.layers = {MaxPoolLayer{2, 2}};
  ModelWeights w;
  w.layers.resize(1);
  Tensor x;
  x.shape = spec.input_shape;
  x.data = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 16};
  auto acts = infer(spec, w, x);
  CHECK(acts[0].data == std::vector<double>{6, 8, 14, 16});

  // 1x1 conv with a unit kernel is the identity per channel.
  ModelSpec conv;
  conv.input_shape = {3, 3, 1};
  conv.layers = {Conv3DLayer{1, 1, 1}};
  ModelWeights cw;
  cw.layers.resize(1);
  cw.layers[0].weight = {1.0};
  cw.layers[0].bias = {0.0};
  Tensor y;
  y.shape = conv.input_shape;
  y.data = {1, 2, 3, 4, 5, 6, 7, 8, 9};
  CHECK(infer(conv, cw, y)[0].data == y.data);
}

TEST_CASE("training is deterministic and learns separable blobs") {
  Dataset data = make_blobs(5, 16, 3, 64);
  ModelSpec spec = mlp_spec(16, {12}, 3);
  TrainConfig tc;
  tc.epochs = 25;
  tc.seed = 5;
  ModelWeights w1 = train_baseline(spec, data, tc);
  ModelWeights w2 = train_baseline(spec, data, tc);
  CHECK(weights_equal(w1, w2));
  CHECK(accuracy(spec, w1, data) >= 0.95);

  // Zero epochs returns the initialization untouched.
  TrainConfig zero;
  zero.epochs = 0;
  zero.seed = 5;
  CHECK(weights_equal(train_baseline(spec, data, zero),
                      init_weights(spec, 5)));
}

TEST_CASE("digit set trains above chance") {
  Dataset data = make_digits(6, 12);
  ModelSpec spec;
  spec.input_shape = {8, 8, 1};
  spec.layers = {DenseLayer{24}, ReluLayer{}, DenseLayer{10}};
  TrainConfig tc;
  tc.epochs = 60;
  tc.seed = 6;
  tc.learning_rate = 0.15;
  ModelWeights w = train_baseline(spec, data, tc);
  CHECK(accuracy(spec, w, data) >= 0.95);
}

TEST_CASE("watermark embedding reaches zero BER and keeps accuracy") {
  Dataset data = make_blobs(11, 64, 4, 128);
  ModelSpec spec = mlp_spec(64, {32, 16}, 4);
  TrainConfig tc;
  tc.epochs = 30;
  tc.seed = 11;
  ModelWeights baseline = train_baseline(spec, data, tc);
  double base_acc = accuracy(spec, baseline, data);

  WatermarkKey key = make_watermark_key(spec, data, 0, 1, 32, 0.0, 11);
  CHECK(key.trigger_inputs.size() >= 16);
  EmbedConfig ec;
  ModelWeights marked = embed_watermark(spec, baseline, data, key, ec, 11);

  // Architecture unchanged, only weights move.
  REQUIRE(marked.layers.size() == baseline.layers.size());
  for (size_t i = 0; i < marked.layers.size(); ++i) {
    CHECK(marked.layers[i].weight.size() == baseline.layers[i].weight.size());
    CHECK(marked.layers[i].bias.size() == baseline.layers[i].bias.size());
  }

  ExtractionTrace trace = extract_plaintext(spec, marked, key);
  CHECK(trace.ber == 0.0);
  CHECK(trace.valid);

  double marked_acc = accuracy(spec, marked, data);
  CHECK(base_acc - marked_acc <= 0.02);

  // An un-watermarked model does not carry the signature.
  ExtractionTrace base_trace = extract_plaintext(spec, baseline, key);
  CHECK(base_trace.ber > 0.1);
  CHECK(!base_trace.valid);

  // A fresh random key reads out noise, not the signature.
  WatermarkKey other = make_watermark_key(spec, data, 0, 1, 32, 0.0, 999);
  ExtractionTrace other_trace = extract_plaintext(spec, marked, other);
  CHECK(other_trace.ber >= 0.2);
}

TEST_CASE("random keys read noise: Monte-Carlo over 100 seeds") {
  Dataset data = make_blobs(11, 64, 4, 128);
  ModelSpec spec = mlp_spec(64, {32, 16}, 4);
  TrainConfig tc;
  tc.epochs = 30;
  tc.seed = 11;
  ModelWeights baseline = train_baseline(spec, data, tc);
  WatermarkKey key = make_watermark_key(spec, data, 0, 1, 32, 0.0, 11);
  EmbedConfig ec;
  ModelWeights marked = embed_watermark(spec, baseline, data, key, ec, 11);

  // Against fresh random keys the extracted bits are coin flips: BER is
  // binomial around 0.5, so almost every draw lands in [0.3, 0.7].
  int in_band = 0;
  double mean = 0.0;
  for (uint64_t seed = 1; seed <= 100; ++seed) {
    WatermarkKey other = make_watermark_key(spec, data, 0, 1, 32, 0.0,
                                            100000 + seed);
    double ber = extract_plaintext(spec, marked, other).ber;
    mean += ber / 100.0;
    if (ber >= 0.3 && ber <= 0.7) ++in_band;
  }
  CHECK(in_band >= 93);
  CHECK(mean > 0.44);
  CHECK(mean < 0.56);
}

TEST_CASE("lambda zero means no embedding signal") {
  Dataset data = make_blobs(13, 32, 3, 96);
  ModelSpec spec = mlp_spec(32, {32}, 3);
  TrainConfig tc;
  tc.epochs = 20;
  tc.seed = 13;
  ModelWeights baseline = train_baseline(spec, data, tc);
  double total_ber = 0.0;
  for (uint64_t seed : {101, 102, 103, 104, 105}) {
    WatermarkKey key = make_watermark_key(spec, data, 0, 1, 32, 0.0, seed);
    EmbedConfig ec;
    ec.lambda_wm = 0.0;
    ec.epochs = 5;
    ModelWeights tuned = embed_watermark(spec, baseline, data, key, ec, seed);
    total_ber += extract_plaintext(spec, tuned, key).ber;
  }
  double mean_ber = total_ber / 5.0;
  CHECK(mean_ber > 0.3);
  CHECK(mean_ber < 0.7);
}

TEST_CASE("backprop gradients match central differences on all layer kinds") {
  // Small CNN exercising every trainable path: conv, pool, relu, sigmoid,
  // dense. One SGD step over a one-sample "dataset" equals -lr * gradient,
  // which central differences of the loss reproduce.
  ModelSpec spec;
  spec.input_shape = {6, 6, 2};
  spec.layers = {Conv3DLayer{3, 3, 1}, ReluLayer{},  MaxPoolLayer{2, 2},
                 SigmoidLayer{},       DenseLayer{5}};
  Dataset data;
  data.num_classes = 5;
  std::mt19937_64 rng(91);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  Tensor x;
  x.shape = spec.input_shape;
  x.data.resize(x.shape.size());
  for (double& v : x.data) v = d(rng);
  data.inputs.push_back(x);
  data.labels.push_back(3);

  ModelWeights w0 = init_weights(spec, 91);
  auto loss_at = [&](const ModelWeights& w) {
    auto scores = predict(spec, w, x);
    double mx = *std::max_element(scores.begin(), scores.end());
    double sum = 0;
    for (double s : scores) sum += std::exp(s - mx);
    return -(scores[3] - mx - std::log(sum));
  };

  TrainConfig tc;
  tc.epochs = 1;
  tc.batch_size = 1;
  tc.learning_rate = 1.0;  // step = -gradient exactly
  tc.seed = 91;
  ModelWeights stepped = train_baseline(spec, data, tc);
  // train_baseline re-initializes from its seed; same seed, same start.
  REQUIRE(stepped.layers.size() == w0.layers.size());

  const double eps = 1e-6;
  int checked = 0;
  for (size_t li = 0; li < w0.layers.size(); ++li) {
    for (size_t k = 0; k < w0.layers[li].weight.size(); k += 7) {
      ModelWeights plus = w0, minus = w0;
      plus.layers[li].weight[k] += eps;
      minus.layers[li].weight[k] -= eps;
      double numeric = (loss_at(plus) - loss_at(minus)) / (2 * eps);
      double analytic = w0.layers[li].weight[k] - stepped.layers[li].weight[k];
      CHECK(std::abs(numeric - analytic) <=
            1e-5 * std::max(1.0, std::abs(numeric)));
      ++checked;
    }
    for (size_t k = 0; k < w0.layers[li].bias.size(); k += 3) {
      ModelWeights plus = w0, minus = w0;
      plus.layers[li].bias[k] += eps;
      minus.layers[li].bias[k] -= eps;
      double numeric = (loss_at(plus) - loss_at(minus)) / (2 * eps);
      double analytic = w0.layers[li].bias[k] - stepped.layers[li].bias[k];
      CHECK(std::abs(numeric - analytic) <=
            1e-5 * std::max(1.0, std::abs(numeric)));
      ++checked;
    }
  }
  CHECK(checked >= 20);
}

TEST_CASE("conv network trains on digits") {
  Dataset data = make_digits(14, 10);
  ModelSpec spec;
  spec.input_shape = {8, 8, 1};
  spec.layers = {Conv3DLayer{6, 3, 1}, ReluLayer{}, MaxPoolLayer{2, 2},
                 DenseLayer{10}};
  TrainConfig tc;
  tc.epochs = 40;
  tc.seed = 14;
  tc.learning_rate = 0.1;
  ModelWeights w = train_baseline(spec, data, tc);
  CHECK(accuracy(spec, w, data) >= 0.9);
}

TEST_CASE("shape errors are reported") {
  ModelSpec spec = mlp_spec(8, {4}, 2);
  ModelWeights w = init_weights(spec, 1);
  Tensor bad;
  bad.shape = {1, 1, 9};
  bad.data.resize(9);
  CHECK_THROWS_AS(infer(spec, w, bad), ShapeMismatchError);
}

TEST_CASE("runaway training reports divergence") {
  Dataset data = make_blobs(15, 8, 2, 32);
  ModelSpec spec = mlp_spec(8, {8}, 2);
  TrainConfig tc;
  tc.epochs = 50;
  tc.seed = 15;
  tc.learning_rate = 1e9;
  CHECK_THROWS_AS(train_baseline(spec, data, tc), DivergenceError);
}
