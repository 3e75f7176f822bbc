#include "zkwm/nn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "zkwm/errors.hpp"
#include "zkwm/kernels.hpp"

namespace zkwm {
namespace {

struct ForwardCache {
  std::vector<Tensor> activations;                 // output of layer i
  std::vector<std::vector<uint32_t>> pool_argmax;  // per layer (empty if n/a)
};

double sigmoid_real(double x) { return 1.0 / (1.0 + std::exp(-x)); }

Tensor dense_forward(const DenseLayer& layer, const LayerWeights& w,
                     const Tensor& in) {
  const size_t n = in.data.size();
  if (w.weight.size() != (size_t)layer.out_features * n ||
      w.bias.size() != layer.out_features)
    throw ShapeMismatchError("dense: weight shape");
  Tensor out;
  out.shape = {1, 1, layer.out_features};
  out.data.resize(layer.out_features);
  for (uint32_t o = 0; o < layer.out_features; ++o)
    out.data[o] = kernels::dot(&w.weight[(size_t)o * n], in.data.data(), n) +
                  w.bias[o];
  return out;
}

Tensor conv_forward(const Conv3DLayer& layer, const LayerWeights& w,
                    const Tensor& in) {
  const uint32_t kh = layer.kernel, s = layer.stride;
  if (kh > in.shape.h || kh > in.shape.w)
    throw ShapeMismatchError("conv3d: kernel larger than input");
  const uint32_t oh = (in.shape.h - kh) / s + 1;
  const uint32_t ow = (in.shape.w - kh) / s + 1;
  const size_t patch = (size_t)kh * kh * in.shape.c;
  if (w.weight.size() != patch * layer.out_channels ||
      w.bias.size() != layer.out_channels)
    throw ShapeMismatchError("conv3d: weight shape");
  Tensor out;
  out.shape = {oh, ow, layer.out_channels};
  out.data.resize(out.shape.size());
  std::vector<double> col(patch);
  for (uint32_t i = 0; i < oh; ++i)
    for (uint32_t j = 0; j < ow; ++j) {
      size_t t = 0;
      for (uint32_t di = 0; di < kh; ++di) {
        const double* row =
            &in.data[((size_t)(i * s + di) * in.shape.w + j * s) * in.shape.c];
        for (size_t k = 0; k < (size_t)kh * in.shape.c; ++k) col[t++] = row[k];
      }
      for (uint32_t k = 0; k < layer.out_channels; ++k)
        out.data[((size_t)i * ow + j) * layer.out_channels + k] =
            kernels::dot(&w.weight[k * patch], col.data(), patch) + w.bias[k];
    }
  return out;
}

Tensor pool_forward(const MaxPoolLayer& layer, const Tensor& in,
                    std::vector<uint32_t>& argmax) {
  const uint32_t kh = layer.kernel, s = layer.stride;
  if (kh > in.shape.h || kh > in.shape.w)
    throw ShapeMismatchError("maxpool: kernel larger than input");
  const uint32_t oh = (in.shape.h - kh) / s + 1;
  const uint32_t ow = (in.shape.w - kh) / s + 1;
  Tensor out;
  out.shape = {oh, ow, in.shape.c};
  out.data.resize(out.shape.size());
  argmax.resize(out.data.size());
  for (uint32_t i = 0; i < oh; ++i)
    for (uint32_t j = 0; j < ow; ++j)
      for (uint32_t c = 0; c < in.shape.c; ++c) {
        double best = -HUGE_VAL;
        uint32_t best_idx = 0;
        for (uint32_t di = 0; di < kh; ++di)
          for (uint32_t dj = 0; dj < kh; ++dj) {
            uint32_t idx =
                ((i * s + di) * in.shape.w + (j * s + dj)) * in.shape.c + c;
            if (in.data[idx] > best) {
              best = in.data[idx];
              best_idx = idx;
            }
          }
        size_t o = ((size_t)i * ow + j) * in.shape.c + c;
        out.data[o] = best;
        argmax[o] = best_idx;
      }
  return out;
}

ForwardCache forward(const ModelSpec& spec, const ModelWeights& weights,
                     const Tensor& x) {
  if (!(x.shape == spec.input_shape))
    throw ShapeMismatchError("infer: input shape mismatch");
  if (weights.layers.size() != spec.layers.size())
    throw ShapeMismatchError("infer: weights do not match spec");
  ForwardCache cache;
  cache.pool_argmax.resize(spec.layers.size());
  const Tensor* cur = &x;
  for (size_t i = 0; i < spec.layers.size(); ++i) {
    Tensor out;
    const LayerSpec& layer = spec.layers[i];
    if (const auto* dense = std::get_if<DenseLayer>(&layer)) {
      out = dense_forward(*dense, weights.layers[i], *cur);
    } else if (const auto* conv = std::get_if<Conv3DLayer>(&layer)) {
      out = conv_forward(*conv, weights.layers[i], *cur);
    } else if (const auto* pool = std::get_if<MaxPoolLayer>(&layer)) {
      out = pool_forward(*pool, *cur, cache.pool_argmax[i]);
    } else if (std::holds_alternative<ReluLayer>(layer)) {
      out = *cur;
      for (double& v : out.data) v = std::max(0.0, v);
    } else {
      out = *cur;
      for (double& v : out.data) v = sigmoid_real(v);
    }
    cache.activations.push_back(std::move(out));
    cur = &cache.activations.back();
  }
  return cache;
}

struct Gradients {
  std::vector<LayerWeights> layers;
};

Gradients zero_gradients(const ModelWeights& weights) {
  Gradients g;
  g.layers.resize(weights.layers.size());
  for (size_t i = 0; i < weights.layers.size(); ++i) {
    g.layers[i].weight.assign(weights.layers[i].weight.size(), 0.0);
    g.layers[i].bias.assign(weights.layers[i].bias.size(), 0.0);
  }
  return g;
}

// Backpropagate `grad` (w.r.t. the output of layer `start`) down to the
// input, accumulating parameter gradients.
void backward(const ModelSpec& spec, const ModelWeights& weights,
              const ForwardCache& cache, const Tensor& input, size_t start,
              std::vector<double> grad, Gradients& grads) {
  for (size_t ii = start + 1; ii-- > 0;) {
    const LayerSpec& layer = spec.layers[ii];
    const Tensor& in = ii == 0 ? input : cache.activations[ii - 1];
    const Tensor& out = cache.activations[ii];
    std::vector<double> next(in.data.size(), 0.0);
    if (const auto* dense = std::get_if<DenseLayer>(&layer)) {
      const LayerWeights& w = weights.layers[ii];
      LayerWeights& gw = grads.layers[ii];
      const size_t n = in.data.size();
      for (uint32_t o = 0; o < dense->out_features; ++o) {
        double g = grad[o];
        gw.bias[o] += g;
        kernels::axpy(g, in.data.data(), &gw.weight[(size_t)o * n], n);
        kernels::axpy(g, &w.weight[(size_t)o * n], next.data(), n);
      }
    } else if (const auto* conv = std::get_if<Conv3DLayer>(&layer)) {
      const LayerWeights& w = weights.layers[ii];
      LayerWeights& gw = grads.layers[ii];
      const uint32_t kh = conv->kernel, s = conv->stride;
      const uint32_t ow = out.shape.w;
      const size_t patch = (size_t)kh * kh * in.shape.c;
      for (uint32_t i = 0; i < out.shape.h; ++i)
        for (uint32_t j = 0; j < ow; ++j)
          for (uint32_t k = 0; k < conv->out_channels; ++k) {
            double g = grad[((size_t)i * ow + j) * conv->out_channels + k];
            if (g == 0.0) continue;
            gw.bias[k] += g;
            size_t t = k * patch;
            for (uint32_t di = 0; di < kh; ++di)
              for (uint32_t dj = 0; dj < kh; ++dj)
                for (uint32_t c = 0; c < in.shape.c; ++c, ++t) {
                  size_t idx =
                      ((size_t)(i * s + di) * in.shape.w + (j * s + dj)) *
                          in.shape.c +
                      c;
                  gw.weight[t] += g * in.data[idx];
                  next[idx] += g * w.weight[t];
                }
          }
    } else if (std::holds_alternative<MaxPoolLayer>(layer)) {
      const auto& argmax = cache.pool_argmax[ii];
      for (size_t o = 0; o < grad.size(); ++o) next[argmax[o]] += grad[o];
    } else if (std::holds_alternative<ReluLayer>(layer)) {
      for (size_t o = 0; o < grad.size(); ++o)
        next[o] = in.data[o] > 0.0 ? grad[o] : 0.0;
    } else {  // sigmoid
      for (size_t o = 0; o < grad.size(); ++o)
        next[o] = grad[o] * out.data[o] * (1.0 - out.data[o]);
    }
    grad = std::move(next);
  }
}

std::vector<double> softmax(const std::vector<double>& logits) {
  double mx = *std::max_element(logits.begin(), logits.end());
  std::vector<double> p(logits.size());
  double sum = 0;
  for (size_t i = 0; i < logits.size(); ++i) sum += p[i] = std::exp(logits[i] - mx);
  for (double& v : p) v /= sum;
  return p;
}

void apply_gradients(ModelWeights& weights, const Gradients& grads,
                     double scale) {
  for (size_t i = 0; i < weights.layers.size(); ++i) {
    kernels::axpy(scale, grads.layers[i].weight.data(),
                  weights.layers[i].weight.data(),
                  weights.layers[i].weight.size());
    kernels::axpy(scale, grads.layers[i].bias.data(),
                  weights.layers[i].bias.data(), weights.layers[i].bias.size());
  }
}

// Watermark regularizer state for one pass over the trigger batch.
struct WatermarkPass {
  std::vector<ForwardCache> caches;
  std::vector<double> mean;       // mu at l_wm
  std::vector<double> response;   // sigmoid(mu * A)
  double loss = 0.0;
};

WatermarkPass watermark_forward(const ModelSpec& spec,
                                const ModelWeights& weights,
                                const WatermarkKey& key) {
  WatermarkPass pass;
  const size_t kTriggers = key.trigger_inputs.size();
  for (const Tensor& t : key.trigger_inputs)
    pass.caches.push_back(forward(spec, weights, t));
  const size_t m =
      pass.caches[0].activations[key.embedded_layer - 1].data.size();
  const size_t n = key.wm_bits.size();
  if (key.projection.size() != m * n)
    throw ShapeMismatchError("watermark: projection shape");
  pass.mean.assign(m, 0.0);
  for (const auto& cache : pass.caches)
    kernels::axpy(1.0 / (double)kTriggers,
                  cache.activations[key.embedded_layer - 1].data.data(),
                  pass.mean.data(), m);
  pass.response.resize(n);
  for (size_t j = 0; j < n; ++j) {
    double z = 0;
    for (size_t i = 0; i < m; ++i) z += pass.mean[i] * key.projection[i * n + j];
    pass.response[j] = sigmoid_real(z);
    double y = key.wm_bits[j] ? 1.0 : 0.0;
    // Clamped BCE to dodge log(0) once the embedding saturates.
    double g = std::clamp(pass.response[j], 1e-12, 1.0 - 1e-12);
    pass.loss += -(y * std::log(g) + (1.0 - y) * std::log(1.0 - g));
  }
  return pass;
}

uint64_t mix_seed(uint64_t seed, uint64_t salt) {
  uint64_t x = seed + 0x9e3779b97f4a7c15ull * (salt + 1);
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ull;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebull;
  x ^= x >> 31;
  return x;
}

}  // namespace

const char* layer_name(const LayerSpec& layer) {
  if (std::holds_alternative<DenseLayer>(layer)) return "dense";
  if (std::holds_alternative<Conv3DLayer>(layer)) return "conv3d";
  if (std::holds_alternative<MaxPoolLayer>(layer)) return "maxpool";
  if (std::holds_alternative<ReluLayer>(layer)) return "relu";
  return "sigmoid";
}

std::vector<Shape3> ModelSpec::activation_shapes() const {
  if (layers.empty()) throw ShapeMismatchError("model needs at least one layer");
  std::vector<Shape3> shapes;
  Shape3 cur = input_shape;
  for (const LayerSpec& layer : layers) {
    if (const auto* dense = std::get_if<DenseLayer>(&layer)) {
      if (dense->out_features == 0)
        throw ShapeMismatchError("dense layer with zero width");
      cur = {1, 1, dense->out_features};
    } else if (const auto* conv = std::get_if<Conv3DLayer>(&layer)) {
      if (conv->kernel == 0 || conv->stride == 0 || conv->kernel > cur.h ||
          conv->kernel > cur.w)
        throw ShapeMismatchError("conv3d shape inconsistent");
      cur = {(cur.h - conv->kernel) / conv->stride + 1,
             (cur.w - conv->kernel) / conv->stride + 1, conv->out_channels};
    } else if (const auto* pool = std::get_if<MaxPoolLayer>(&layer)) {
      if (pool->kernel == 0 || pool->stride == 0 || pool->kernel > cur.h ||
          pool->kernel > cur.w)
        throw ShapeMismatchError("maxpool shape inconsistent");
      cur = {(cur.h - pool->kernel) / pool->stride + 1,
             (cur.w - pool->kernel) / pool->stride + 1, cur.c};
    }
    shapes.push_back(cur);
  }
  return shapes;
}

std::string ModelSpec::describe() const {
  std::string s = std::to_string(input_shape.size());
  for (const LayerSpec& layer : layers) {
    s += " - ";
    if (const auto* dense = std::get_if<DenseLayer>(&layer)) {
      s += "FC(" + std::to_string(dense->out_features) + ")";
    } else if (const auto* conv = std::get_if<Conv3DLayer>(&layer)) {
      s += "C(" + std::to_string(conv->out_channels) + "," +
           std::to_string(conv->kernel) + "," + std::to_string(conv->stride) +
           ")";
    } else if (const auto* pool = std::get_if<MaxPoolLayer>(&layer)) {
      s += "MP(" + std::to_string(pool->kernel) + "," +
           std::to_string(pool->stride) + ")";
    } else if (std::holds_alternative<ReluLayer>(layer)) {
      s += "ReLU";
    } else {
      s += "Sigmoid";
    }
  }
  return s;
}

std::vector<Tensor> infer(const ModelSpec& spec, const ModelWeights& weights,
                          const Tensor& x) {
  return forward(spec, weights, x).activations;
}

std::vector<double> predict(const ModelSpec& spec, const ModelWeights& weights,
                            const Tensor& x) {
  return forward(spec, weights, x).activations.back().data;
}

ModelWeights init_weights(const ModelSpec& spec, uint64_t seed) {
  auto shapes = spec.activation_shapes();
  std::mt19937_64 rng(mix_seed(seed, 0xa11c));
  std::normal_distribution<double> normal(0.0, 1.0);
  ModelWeights w;
  Shape3 cur = spec.input_shape;
  for (size_t i = 0; i < spec.layers.size(); ++i) {
    LayerWeights lw;
    if (const auto* dense = std::get_if<DenseLayer>(&spec.layers[i])) {
      size_t fan_in = cur.size();
      double std = std::sqrt(2.0 / (double)fan_in);
      lw.weight.resize((size_t)dense->out_features * fan_in);
      for (double& v : lw.weight) v = normal(rng) * std;
      lw.bias.assign(dense->out_features, 0.0);
    } else if (const auto* conv = std::get_if<Conv3DLayer>(&spec.layers[i])) {
      size_t patch = (size_t)conv->kernel * conv->kernel * cur.c;
      double std = std::sqrt(2.0 / (double)patch);
      lw.weight.resize(patch * conv->out_channels);
      for (double& v : lw.weight) v = normal(rng) * std;
      lw.bias.assign(conv->out_channels, 0.0);
    }
    w.layers.push_back(std::move(lw));
    cur = shapes[i];
  }
  return w;
}

ModelWeights train_baseline(const ModelSpec& spec, const Dataset& data,
                            const TrainConfig& config) {
  ModelWeights weights = init_weights(spec, config.seed);
  if (data.inputs.empty()) return weights;
  std::mt19937_64 rng(mix_seed(config.seed, 0x7ea1));
  std::vector<size_t> order(data.inputs.size());
  std::iota(order.begin(), order.end(), 0);

  for (uint32_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (size_t b = 0; b < order.size(); b += config.batch_size) {
      size_t batch_end = std::min(order.size(), b + config.batch_size);
      Gradients grads = zero_gradients(weights);
      for (size_t s = b; s < batch_end; ++s) {
        const Tensor& x = data.inputs[order[s]];
        uint32_t label = data.labels[order[s]];
        ForwardCache cache = forward(spec, weights, x);
        std::vector<double> probs = softmax(cache.activations.back().data);
        epoch_loss += -std::log(std::max(probs[label], 1e-300));
        probs[label] -= 1.0;  // dCE/dlogits
        backward(spec, weights, cache, x, spec.layers.size() - 1,
                 std::move(probs), grads);
      }
      apply_gradients(weights, grads,
                      -config.learning_rate / (double)(batch_end - b));
    }
    if (!std::isfinite(epoch_loss))
      throw DivergenceError("train_baseline: loss diverged");
  }
  return weights;
}

ModelWeights embed_watermark(const ModelSpec& spec, const ModelWeights& start,
                             const Dataset& data, const WatermarkKey& key,
                             const EmbedConfig& config, uint64_t seed) {
  if (key.trigger_inputs.empty())
    throw ShapeMismatchError("embed_watermark: empty trigger set");
  if (key.embedded_layer < 1 || key.embedded_layer > spec.layers.size())
    throw ShapeMismatchError("embed_watermark: embedded layer out of range");
  ModelWeights weights = start;
  std::mt19937_64 rng(mix_seed(seed, 0xe19b));
  std::vector<size_t> order(data.inputs.size());
  std::iota(order.begin(), order.end(), 0);
  const size_t kTriggers = key.trigger_inputs.size();
  const size_t n = key.wm_bits.size();

  for (uint32_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (size_t b = 0; b < order.size(); b += config.batch_size) {
      size_t batch_end = std::min(order.size(), b + config.batch_size);
      Gradients grads = zero_gradients(weights);
      for (size_t s = b; s < batch_end; ++s) {
        const Tensor& x = data.inputs[order[s]];
        uint32_t label = data.labels[order[s]];
        ForwardCache cache = forward(spec, weights, x);
        std::vector<double> probs = softmax(cache.activations.back().data);
        epoch_loss += -std::log(std::max(probs[label], 1e-300));
        probs[label] -= 1.0;
        backward(spec, weights, cache, x, spec.layers.size() - 1,
                 std::move(probs), grads);
      }
      double batch_scale = 1.0 / (double)(batch_end - b);

      // Embedding regularizer on the trigger batch.
      WatermarkPass pass = watermark_forward(spec, weights, key);
      epoch_loss += config.lambda_wm * pass.loss;
      const size_t m = pass.mean.size();
      std::vector<double> dmean(m, 0.0);
      for (size_t j = 0; j < n; ++j) {
        double dz = pass.response[j] - (key.wm_bits[j] ? 1.0 : 0.0);
        for (size_t i = 0; i < m; ++i)
          dmean[i] += key.projection[i * n + j] * dz;
      }
      double trigger_scale =
          config.lambda_wm / ((double)kTriggers * batch_scale);
      for (size_t t = 0; t < kTriggers; ++t) {
        std::vector<double> g(dmean);
        kernels::scale(trigger_scale, g.data(), g.size());
        backward(spec, weights, pass.caches[t], key.trigger_inputs[t],
                 key.embedded_layer - 1, std::move(g), grads);
      }
      apply_gradients(weights, grads, -config.learning_rate * batch_scale);
    }
    if (!std::isfinite(epoch_loss))
      throw DivergenceError("embed_watermark: loss diverged");
  }
  return weights;
}

ExtractionTrace extract_plaintext(const ModelSpec& spec,
                                  const ModelWeights& weights,
                                  const WatermarkKey& key) {
  if (key.embedded_layer < 1 || key.embedded_layer > spec.layers.size())
    throw ShapeMismatchError("extract: embedded layer out of range");
  ExtractionTrace trace;
  for (const Tensor& t : key.trigger_inputs)
    trace.activations.push_back(
        forward(spec, weights, t).activations[key.embedded_layer - 1].data);
  const size_t m = trace.activations[0].size();
  const size_t n = key.wm_bits.size();
  if (key.projection.size() != m * n)
    throw ShapeMismatchError("extract: projection shape");
  trace.mean.assign(m, 0.0);
  for (const auto& a : trace.activations)
    kernels::axpy(1.0 / (double)trace.activations.size(), a.data(),
                  trace.mean.data(), m);
  trace.projected.assign(n, 0.0);
  for (size_t i = 0; i < m; ++i)
    for (size_t j = 0; j < n; ++j)
      trace.projected[j] += trace.mean[i] * key.projection[i * n + j];
  trace.response.resize(n);
  trace.extracted_bits.resize(n);
  uint64_t mismatches = 0;
  for (size_t j = 0; j < n; ++j) {
    trace.response[j] = sigmoid_real(trace.projected[j]);
    trace.extracted_bits[j] = trace.response[j] >= 0.5 ? 1 : 0;
    mismatches += trace.extracted_bits[j] != (key.wm_bits[j] ? 1 : 0);
  }
  trace.ber = (double)mismatches / (double)n;
  trace.valid = trace.ber <= key.theta;
  return trace;
}

double accuracy(const ModelSpec& spec, const ModelWeights& weights,
                const Dataset& data) {
  if (data.inputs.empty()) return 0.0;
  size_t correct = 0;
  for (size_t i = 0; i < data.inputs.size(); ++i) {
    auto scores = predict(spec, weights, data.inputs[i]);
    size_t arg = std::max_element(scores.begin(), scores.end()) - scores.begin();
    correct += arg == data.labels[i];
  }
  return (double)correct / (double)data.inputs.size();
}

Dataset make_blobs(uint64_t seed, uint32_t dim, uint32_t classes,
                   uint32_t per_class) {
  std::mt19937_64 rng(mix_seed(seed, 0xb10b));
  std::normal_distribution<double> normal(0.0, 1.0);
  Dataset data;
  data.num_classes = classes;
  std::vector<std::vector<double>> means(classes, std::vector<double>(dim));
  for (auto& m : means)
    for (double& v : m) v = normal(rng) * 1.5;
  for (uint32_t c = 0; c < classes; ++c)
    for (uint32_t s = 0; s < per_class; ++s) {
      Tensor t;
      t.shape = {1, 1, dim};
      t.data.resize(dim);
      for (uint32_t d = 0; d < dim; ++d)
        t.data[d] = means[c][d] + normal(rng) * 0.35;
      data.inputs.push_back(std::move(t));
      data.labels.push_back(c);
    }
  return data;
}

Dataset make_digits(uint64_t seed, uint32_t per_class) {
  // 8x8 glyphs for 0-9; samples add jitter and Gaussian noise.
  static const char* glyphs[10][8] = {
      {"..####..", ".#....#.", "#......#", "#......#", "#......#", "#......#",
       ".#....#.", "..####.."},
      {"...##...", "..###...", ".#.#....", "...#....", "...#....", "...#....",
       "...#....", ".######."},
      {"..####..", ".#....#.", "......#.", ".....#..", "...##...", "..#.....",
       ".#......", ".######."},
      {"..####..", ".#....#.", "......#.", "...###..", "......#.", "......#.",
       ".#....#.", "..####.."},
      {"....##..", "...#.#..", "..#..#..", ".#...#..", "#....#..", "#######.",
       ".....#..", ".....#.."},
      {".######.", ".#......", "#.......", "#####...", ".....#..", "......#.",
       ".#...#..", "..###..."},
      {"..####..", ".#......", "#.......", "#.####..", "##....#.", "#......#",
       ".#....#.", "..####.."},
      {"#######.", "......#.", ".....#..", "....#...", "...#....", "..#.....",
       "..#.....", "..#....."},
      {"..####..", ".#....#.", ".#....#.", "..####..", ".#....#.", "#......#",
       "#......#", ".######."},
      {"..####..", ".#....#.", "#......#", ".#.....#", "..######", ".......#",
       "......#.", ".####..."}};
  std::mt19937_64 rng(mix_seed(seed, 0xd161));
  std::normal_distribution<double> noise(0.0, 0.15);
  std::uniform_int_distribution<int> jitter(-1, 1);
  Dataset data;
  data.num_classes = 10;
  for (uint32_t c = 0; c < 10; ++c)
    for (uint32_t s = 0; s < per_class; ++s) {
      int dx = jitter(rng), dy = jitter(rng);
      Tensor t;
      t.shape = {8, 8, 1};
      t.data.assign(64, 0.0);
      for (int i = 0; i < 8; ++i)
        for (int j = 0; j < 8; ++j) {
          int si = i - dy, sj = j - dx;
          double v = 0.0;
          if (si >= 0 && si < 8 && sj >= 0 && sj < 8)
            v = glyphs[c][si][sj] == '#' ? 1.0 : 0.0;
          t.data[(size_t)i * 8 + j] = v + noise(rng);
        }
      data.inputs.push_back(std::move(t));
      data.labels.push_back(c);
    }
  return data;
}

WatermarkKey make_watermark_key(const ModelSpec& spec, const Dataset& data,
                                uint32_t class_label, uint32_t embedded_layer,
                                uint32_t signature_bits, double theta,
                                uint64_t seed) {
  auto shapes = spec.activation_shapes();
  if (embedded_layer < 1 || embedded_layer > shapes.size())
    throw ShapeMismatchError("make_watermark_key: layer out of range");
  const size_t m = shapes[embedded_layer - 1].size();

  std::vector<size_t> members;
  for (size_t i = 0; i < data.labels.size(); ++i)
    if (data.labels[i] == class_label) members.push_back(i);
  if (members.empty())
    throw ShapeMismatchError("make_watermark_key: empty class");
  // Trigger count: max(16, ceil(1% of the class)), capped by class size.
  size_t want = std::max<size_t>(16, (members.size() + 99) / 100);
  want = std::min(want, members.size());

  std::mt19937_64 rng(mix_seed(seed, 0x33ee));
  std::shuffle(members.begin(), members.end(), rng);

  WatermarkKey key;
  key.class_label = class_label;
  key.embedded_layer = embedded_layer;
  key.theta = theta;
  for (size_t i = 0; i < want; ++i)
    key.trigger_inputs.push_back(data.inputs[members[i]]);
  std::normal_distribution<double> normal(0.0, 1.0);
  key.projection.resize(m * signature_bits);
  double scale = 1.0 / std::sqrt((double)m);
  for (double& v : key.projection) v = normal(rng) * scale;
  key.wm_bits.resize(signature_bits);
  for (auto& bit : key.wm_bits) bit = (uint8_t)(rng() & 1);
  return key;
}

}  // namespace zkwm
