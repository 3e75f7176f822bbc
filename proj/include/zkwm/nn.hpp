#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "zkwm/fixed_point.hpp"

namespace zkwm {

struct Shape3 {
  uint32_t h = 1, w = 1, c = 1;
  size_t size() const { return (size_t)h * w * c; }
  bool operator==(const Shape3&) const = default;
};

struct DenseLayer {
  uint32_t out_features = 0;
};
struct Conv3DLayer {
  uint32_t out_channels = 0, kernel = 0, stride = 1;
};
struct MaxPoolLayer {
  uint32_t kernel = 0, stride = 1;
};
struct ReluLayer {};
struct SigmoidLayer {};

using LayerSpec =
    std::variant<DenseLayer, Conv3DLayer, MaxPoolLayer, ReluLayer, SigmoidLayer>;

const char* layer_name(const LayerSpec& layer);

/// Architecture grammar: FC(a), C(a,b,c), MP(a,b), ReLU, Sigmoid chained from
/// an input shape. Shapes must chain consistently.
struct ModelSpec {
  Shape3 input_shape;
  std::vector<LayerSpec> layers;

  /// Output shape of every layer, validating the chain. Throws
  /// ShapeMismatchError on inconsistency.
  std::vector<Shape3> activation_shapes() const;
  std::string describe() const;
};

/// Flat row-major (h, w, c) tensor of doubles.
struct Tensor {
  std::vector<double> data;
  Shape3 shape;
};

struct LayerWeights {
  std::vector<double> weight;  // Dense: out x in; Conv: [K][k][k][C]
  std::vector<double> bias;    // Dense/Conv: out
};

struct ModelWeights {
  std::vector<LayerWeights> layers;  // empty entries for parameterless layers
};

struct WatermarkKey {
  std::vector<Tensor> trigger_inputs;  // X^key
  std::vector<double> projection;      // A: M x N row-major
  std::vector<uint8_t> wm_bits;        // N bits, values 0/1
  // l_wm counts layers from 1; the extracted activation map is the output of
  // layer l_wm. l_wm = 1 on an FC(a)-ReLU-... network reads the first dense
  // layer's output, whose distribution the embedding regularizer shifts.
  uint32_t embedded_layer = 1;
  uint32_t class_label = 0;  // s
  double theta = 0.0;
};

struct ExtractionTrace {
  std::vector<std::vector<double>> activations;  // per trigger, layer l_wm
  std::vector<double> mean;                      // mu, 1 x M
  std::vector<double> projected;                 // mu * A, 1 x N
  std::vector<double> response;                  // sigmoid(mu * A)
  std::vector<uint8_t> extracted_bits;           // wm_hat
  double ber = 0.0;
  bool valid = false;  // ber <= theta
};

struct Dataset {
  std::vector<Tensor> inputs;
  std::vector<uint32_t> labels;
  uint32_t num_classes = 0;
};

struct TrainConfig {
  uint32_t epochs = 40;
  uint32_t batch_size = 32;
  double learning_rate = 0.05;
  uint64_t seed = 1;
};

struct EmbedConfig {
  double lambda_wm = 1.0;
  uint32_t epochs = 30;
  uint32_t batch_size = 32;
  double learning_rate = 0.01;
};

/// Forward pass returning every layer's activations (index i = output of
/// layer i). Input tensor must match the spec's input shape.
std::vector<Tensor> infer(const ModelSpec& spec, const ModelWeights& weights,
                          const Tensor& x);

/// Class scores for the final layer (flattened final activation).
std::vector<double> predict(const ModelSpec& spec, const ModelWeights& weights,
                            const Tensor& x);

ModelWeights init_weights(const ModelSpec& spec, uint64_t seed);

/// Minibatch SGD with softmax cross-entropy. Deterministic for a fixed seed.
/// Throws DivergenceError if the loss turns non-finite.
ModelWeights train_baseline(const ModelSpec& spec, const Dataset& data,
                            const TrainConfig& config);

/// DeepSigns-style embedding: fine-tunes with
///   loss = CE + lambda_wm * BCE(sigmoid(mean_activation(l_wm) * A), wm).
ModelWeights embed_watermark(const ModelSpec& spec, const ModelWeights& start,
                             const Dataset& data, const WatermarkKey& key,
                             const EmbedConfig& config, uint64_t seed);

/// Real-arithmetic watermark extraction (Alg. 1 in plaintext); the reference
/// the quantized pipeline is compared against.
ExtractionTrace extract_plaintext(const ModelSpec& spec,
                                  const ModelWeights& weights,
                                  const WatermarkKey& key);

/// Fraction of correct argmax predictions.
double accuracy(const ModelSpec& spec, const ModelWeights& weights,
                const Dataset& data);

/// Seeded Gaussian-blob classification set (one Gaussian per class).
Dataset make_blobs(uint64_t seed, uint32_t dim, uint32_t classes,
                   uint32_t per_class);

/// Seeded synthetic 8x8 "digit" set: per-class stroke templates plus noise.
Dataset make_digits(uint64_t seed, uint32_t per_class);

/// Fresh watermark key: triggers sampled from class `s` of the dataset,
/// Gaussian projection matrix, uniform random signature bits.
WatermarkKey make_watermark_key(const ModelSpec& spec, const Dataset& data,
                                uint32_t class_label, uint32_t embedded_layer,
                                uint32_t signature_bits, double theta,
                                uint64_t seed);

}  // namespace zkwm
