#include "zkwm/io.hpp"

#include <openssl/evp.h>

#include <cstring>

#include <json.hpp>

#include "zkwm/errors.hpp"

namespace zkwm {
namespace {

using nlohmann::json;

constexpr uint32_t kFileVersion = 1;

std::string b64_encode(std::span<const uint8_t> data) {
  std::string out(4 * ((data.size() + 2) / 3) + 1, '\0');
  int n = EVP_EncodeBlock((uint8_t*)out.data(), data.data(), (int)data.size());
  out.resize(n);
  return out;
}

std::vector<uint8_t> b64_decode(const std::string& text) {
  std::vector<uint8_t> out(3 * (text.size() / 4) + 3);
  int n = EVP_DecodeBlock(out.data(), (const uint8_t*)text.data(),
                          (int)text.size());
  if (n < 0) throw MalformedFileError("invalid base64 payload");
  // EVP_DecodeBlock keeps padding bytes; trim them.
  size_t pad = 0;
  for (auto it = text.rbegin(); it != text.rend() && *it == '='; ++it) ++pad;
  out.resize((size_t)n - pad);
  return out;
}

std::vector<uint8_t> doubles_to_bytes(std::span<const double> v) {
  std::vector<uint8_t> out(v.size() * 8);
  for (size_t i = 0; i < v.size(); ++i) {
    uint64_t bits;
    std::memcpy(&bits, &v[i], 8);
    for (int j = 0; j < 8; ++j) out[i * 8 + j] = (uint8_t)(bits >> (8 * j));
  }
  return out;
}

std::vector<double> bytes_to_doubles(std::span<const uint8_t> bytes) {
  if (bytes.size() % 8 != 0)
    throw MalformedFileError("tensor payload not a multiple of 8 bytes");
  std::vector<double> out(bytes.size() / 8);
  for (size_t i = 0; i < out.size(); ++i) {
    uint64_t bits = 0;
    for (int j = 7; j >= 0; --j) bits = (bits << 8) | bytes[i * 8 + j];
    std::memcpy(&out[i], &bits, 8);
  }
  return out;
}

json layer_to_json(const LayerSpec& layer) {
  if (const auto* dense = std::get_if<DenseLayer>(&layer))
    return {{"type", "dense"}, {"out", dense->out_features}};
  if (const auto* conv = std::get_if<Conv3DLayer>(&layer))
    return {{"type", "conv3d"},
            {"out_channels", conv->out_channels},
            {"kernel", conv->kernel},
            {"stride", conv->stride}};
  if (const auto* pool = std::get_if<MaxPoolLayer>(&layer))
    return {{"type", "maxpool"}, {"kernel", pool->kernel}, {"stride", pool->stride}};
  if (std::holds_alternative<ReluLayer>(layer)) return {{"type", "relu"}};
  return {{"type", "sigmoid"}};
}

LayerSpec layer_from_json(const json& j) {
  std::string type = j.at("type");
  if (type == "dense") return DenseLayer{j.at("out")};
  if (type == "conv3d")
    return Conv3DLayer{j.at("out_channels"), j.at("kernel"), j.at("stride")};
  if (type == "maxpool") return MaxPoolLayer{j.at("kernel"), j.at("stride")};
  if (type == "relu") return ReluLayer{};
  if (type == "sigmoid") return SigmoidLayer{};
  throw MalformedFileError("unknown layer type: " + type);
}

json spec_json(const ModelSpec& spec) {
  json layers = json::array();
  for (const LayerSpec& layer : spec.layers) layers.push_back(layer_to_json(layer));
  return {{"input_shape",
           {spec.input_shape.h, spec.input_shape.w, spec.input_shape.c}},
          {"layers", layers}};
}

ModelSpec spec_from(const json& j) {
  ModelSpec spec;
  auto shape = j.at("input_shape");
  spec.input_shape = {shape.at(0), shape.at(1), shape.at(2)};
  for (const json& layer : j.at("layers"))
    spec.layers.push_back(layer_from_json(layer));
  return spec;
}

json format_json(FixedPointFormat fmt) {
  return {{"frac_bits", fmt.frac_bits}, {"total_bits", fmt.total_bits}};
}

FixedPointFormat format_from(const json& j) {
  return {j.at("frac_bits"), j.at("total_bits")};
}

std::string to_hex_string(std::span<const uint8_t> bytes) {
  static const char* digits = "0123456789abcdef";
  std::string s;
  for (uint8_t b : bytes) {
    s += digits[b >> 4];
    s += digits[b & 0xf];
  }
  return s;
}

std::vector<uint8_t> from_hex_string(const std::string& s) {
  if (s.size() % 2 != 0) throw MalformedFileError("odd hex string");
  auto nib = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    throw MalformedFileError("invalid hex digit");
  };
  std::vector<uint8_t> out(s.size() / 2);
  for (size_t i = 0; i < out.size(); ++i)
    out[i] = (uint8_t)((nib(s[2 * i]) << 4) | nib(s[2 * i + 1]));
  return out;
}

void write_blob(const std::string& path, const char magic[4],
                BackendKind backend, const Digest& hash,
                std::span<const uint8_t> payload) {
  VectorSink sink;
  sink.bytes(std::span<const uint8_t>((const uint8_t*)magic, 4));
  sink.u32(kFileVersion);
  sink.u32((uint32_t)backend);
  sink.bytes(hash);
  sink.u64(payload.size());
  sink.bytes(payload);
  write_file(path, sink.buffer());
}

struct Blob {
  BackendKind backend;
  Digest hash;
  std::vector<uint8_t> payload;
};

Blob read_blob(const std::string& path, const char magic[4]) {
  auto data = read_file(path);
  ByteReader r(data);
  auto m = r.bytes(4);
  if (std::memcmp(m.data(), magic, 4) != 0)
    throw MalformedFileError(path + ": bad magic");
  if (r.u32() != kFileVersion)
    throw MalformedFileError(path + ": unsupported version");
  Blob blob;
  blob.backend = (BackendKind)r.u32();
  if (blob.backend != BackendKind::kCheck && blob.backend != BackendKind::kGroth16)
    throw MalformedFileError(path + ": unknown backend id");
  auto h = r.bytes(32);
  std::copy(h.begin(), h.end(), blob.hash.begin());
  uint64_t len = r.u64();
  if (len != r.remaining()) throw MalformedFileError(path + ": length mismatch");
  auto p = r.bytes(len);
  blob.payload.assign(p.begin(), p.end());
  return blob;
}

}  // namespace

std::string spec_to_json(const ModelSpec& spec) { return spec_json(spec).dump(); }

ModelSpec spec_from_json(const std::string& text) {
  return spec_from(json::parse(text));
}

void save_model(const std::string& path, const ModelFile& model) {
  json header = {{"spec", spec_json(model.spec)},
                 {"format", format_json(model.format)},
                 {"seed", model.seed},
                 {"layer_sizes", json::array()}};
  for (const LayerWeights& lw : model.weights.layers)
    header["layer_sizes"].push_back(
        {{"weight", lw.weight.size()}, {"bias", lw.bias.size()}});
  std::string header_text = header.dump();

  VectorSink sink;
  sink.bytes(std::span<const uint8_t>((const uint8_t*)"ZKWM", 4));
  sink.u32(kFileVersion);
  sink.str(header_text);
  for (const LayerWeights& lw : model.weights.layers) {
    auto wb = doubles_to_bytes(lw.weight);
    auto bb = doubles_to_bytes(lw.bias);
    sink.bytes(wb);
    sink.bytes(bb);
  }
  write_file(path, sink.buffer());
}

ModelFile load_model(const std::string& path) {
  auto data = read_file(path);
  ByteReader r(data);
  auto magic = r.bytes(4);
  if (std::memcmp(magic.data(), "ZKWM", 4) != 0)
    throw MalformedFileError(path + ": bad model magic");
  if (r.u32() != kFileVersion)
    throw MalformedFileError(path + ": unsupported model version");
  json header = json::parse(r.str());
  ModelFile model;
  model.spec = spec_from(header.at("spec"));
  model.format = format_from(header.at("format"));
  model.seed = header.at("seed");
  for (const json& sizes : header.at("layer_sizes")) {
    LayerWeights lw;
    size_t wn = sizes.at("weight"), bn = sizes.at("bias");
    lw.weight = bytes_to_doubles(r.bytes(wn * 8));
    lw.bias = bytes_to_doubles(r.bytes(bn * 8));
    model.weights.layers.push_back(std::move(lw));
  }
  if (!r.done()) throw MalformedFileError(path + ": trailing bytes");
  // Validate shape chaining against the payload.
  model.spec.activation_shapes();
  return model;
}

void save_key(const std::string& path, const WatermarkKey& key,
              const Shape3& input_shape) {
  std::vector<double> flat;
  for (const Tensor& t : key.trigger_inputs)
    flat.insert(flat.end(), t.data.begin(), t.data.end());
  size_t features = key.wm_bits.empty()
                        ? 0
                        : key.projection.size() / key.wm_bits.size();
  // Signature bits packed MSB-first into hex.
  std::vector<uint8_t> packed((key.wm_bits.size() + 7) / 8, 0);
  for (size_t i = 0; i < key.wm_bits.size(); ++i)
    if (key.wm_bits[i]) packed[i / 8] |= (uint8_t)(0x80 >> (i % 8));

  json j = {
      {"xkey",
       {{"count", key.trigger_inputs.size()},
        {"shape", {input_shape.h, input_shape.w, input_shape.c}},
        {"data_b64", b64_encode(doubles_to_bytes(flat))}}},
      {"A",
       {{"rows", features},
        {"cols", key.wm_bits.size()},
        {"data_b64", b64_encode(doubles_to_bytes(key.projection))}}},
      {"wm", to_hex_string(packed)},
      {"B", key.wm_bits.size()},
      {"l_wm", key.embedded_layer},
      {"class", key.class_label},
      {"theta", key.theta},
  };
  std::string text = j.dump(2);
  write_file(path,
             std::span<const uint8_t>((const uint8_t*)text.data(), text.size()));
}

WatermarkKey load_key(const std::string& path) {
  auto data = read_file(path);
  json j = json::parse(data.begin(), data.end());
  WatermarkKey key;
  const json& xkey = j.at("xkey");
  size_t count = xkey.at("count");
  Shape3 shape{xkey.at("shape").at(0), xkey.at("shape").at(1),
               xkey.at("shape").at(2)};
  auto flat = bytes_to_doubles(b64_decode(xkey.at("data_b64")));
  if (flat.size() != count * shape.size())
    throw MalformedFileError(path + ": trigger payload size mismatch");
  for (size_t t = 0; t < count; ++t) {
    Tensor tensor;
    tensor.shape = shape;
    tensor.data.assign(flat.begin() + t * shape.size(),
                       flat.begin() + (t + 1) * shape.size());
    key.trigger_inputs.push_back(std::move(tensor));
  }
  const json& a = j.at("A");
  key.projection = bytes_to_doubles(b64_decode(a.at("data_b64")));
  size_t rows = a.at("rows"), cols = a.at("cols");
  if (key.projection.size() != rows * cols)
    throw MalformedFileError(path + ": projection payload size mismatch");
  size_t bits = j.at("B");
  if (bits != cols)
    throw MalformedFileError(path + ": B does not match projection columns");
  auto packed = from_hex_string(j.at("wm"));
  if (packed.size() != (bits + 7) / 8)
    throw MalformedFileError(path + ": signature length mismatch");
  key.wm_bits.resize(bits);
  for (size_t i = 0; i < bits; ++i)
    key.wm_bits[i] = (packed[i / 8] >> (7 - i % 8)) & 1;
  key.embedded_layer = j.at("l_wm");
  key.class_label = j.value("class", 0u);
  key.theta = j.at("theta");
  return key;
}

void save_circuit(const std::string& path, const CircuitArtifact& artifact) {
  VectorSink sink;
  artifact.cs.serialize(sink);
  write_file(path, sink.buffer());

  const CircuitMetadata& meta = artifact.meta;
  auto layout_json = [](const std::vector<LayoutBlock>& blocks) {
    json arr = json::array();
    for (const LayoutBlock& block : blocks)
      arr.push_back({{"name", block.name},
                     {"visibility",
                      block.vis == Visibility::kPublic ? "public" : "private"},
                     {"offset", block.offset},
                     {"count", block.count}});
    return arr;
  };
  json j = {{"format", format_json(meta.format)},
            {"spec", spec_json(meta.spec)},
            {"l_wm", meta.embedded_layer},
            {"B", meta.signature_bits},
            {"triggers", meta.trigger_count},
            {"theta", meta.theta},
            {"T", meta.max_mismatches},
            {"public_layout", layout_json(meta.public_layout)},
            {"witness_layout", layout_json(meta.witness_layout)},
            {"build_hash", digest_hex(meta.build_hash)}};
  std::string text = j.dump(2);
  write_file(path + ".json",
             std::span<const uint8_t>((const uint8_t*)text.data(), text.size()));
}

CircuitArtifact load_circuit(const std::string& path) {
  auto data = read_file(path);
  ByteReader r(data);
  CircuitArtifact artifact;
  artifact.cs = ConstraintSystem::deserialize(r);
  if (!r.done()) throw MalformedFileError(path + ": trailing bytes");

  auto sidecar = read_file(path + ".json");
  json j = json::parse(sidecar.begin(), sidecar.end());
  CircuitMetadata& meta = artifact.meta;
  meta.format = format_from(j.at("format"));
  meta.spec = spec_from(j.at("spec"));
  meta.embedded_layer = j.at("l_wm");
  meta.signature_bits = j.at("B");
  meta.trigger_count = j.at("triggers");
  meta.theta = j.at("theta");
  meta.max_mismatches = j.at("T");
  auto parse_layout = [](const json& arr) {
    std::vector<LayoutBlock> blocks;
    for (const json& b : arr)
      blocks.push_back({b.at("name"),
                        b.at("visibility") == "public" ? Visibility::kPublic
                                                       : Visibility::kPrivate,
                        b.at("offset"), b.at("count")});
    return blocks;
  };
  meta.public_layout = parse_layout(j.at("public_layout"));
  meta.witness_layout = parse_layout(j.at("witness_layout"));
  auto hash = from_hex_string(j.at("build_hash"));
  if (hash.size() != 32) throw MalformedFileError(path + ": bad build hash");
  std::copy(hash.begin(), hash.end(), meta.build_hash.begin());
  if (!(artifact.cs.hash() == meta.build_hash))
    throw MalformedFileError(path + ": build hash does not match circuit");
  return artifact;
}

void save_dataset(const std::string& path, const Dataset& data) {
  if (data.inputs.size() != data.labels.size())
    throw ShapeMismatchError("save_dataset: label count mismatch");
  VectorSink sink;
  sink.bytes(std::span<const uint8_t>((const uint8_t*)"ZKDS", 4));
  sink.u32(kFileVersion);
  sink.u32(data.num_classes);
  sink.u64(data.inputs.size());
  Shape3 shape = data.inputs.empty() ? Shape3{} : data.inputs[0].shape;
  sink.u32(shape.h);
  sink.u32(shape.w);
  sink.u32(shape.c);
  for (size_t i = 0; i < data.inputs.size(); ++i) {
    if (!(data.inputs[i].shape == shape))
      throw ShapeMismatchError("save_dataset: ragged sample shapes");
    sink.u32(data.labels[i]);
    sink.bytes(doubles_to_bytes(data.inputs[i].data));
  }
  write_file(path, sink.buffer());
}

Dataset load_dataset(const std::string& path) {
  auto bytes = read_file(path);
  ByteReader r(bytes);
  auto magic = r.bytes(4);
  if (std::memcmp(magic.data(), "ZKDS", 4) != 0)
    throw MalformedFileError(path + ": bad dataset magic");
  if (r.u32() != kFileVersion)
    throw MalformedFileError(path + ": unsupported dataset version");
  Dataset data;
  data.num_classes = r.u32();
  uint64_t count = r.u64();
  Shape3 shape{r.u32(), r.u32(), r.u32()};
  for (uint64_t i = 0; i < count; ++i) {
    data.labels.push_back(r.u32());
    Tensor t;
    t.shape = shape;
    t.data = bytes_to_doubles(r.bytes(shape.size() * 8));
    data.inputs.push_back(std::move(t));
  }
  if (!r.done()) throw MalformedFileError(path + ": trailing bytes");
  return data;
}

void save_prover_key(const std::string& path, const ProverKey& pk) {
  write_blob(path, "ZKPK", pk.backend, pk.build_hash, pk.payload);
}

ProverKey load_prover_key(const std::string& path) {
  Blob blob = read_blob(path, "ZKPK");
  return {blob.backend, blob.hash, std::move(blob.payload)};
}

void save_verifier_key(const std::string& path, const VerifierKey& vk) {
  write_blob(path, "ZKVK", vk.backend, vk.build_hash, vk.payload);
}

VerifierKey load_verifier_key(const std::string& path) {
  Blob blob = read_blob(path, "ZKVK");
  return {blob.backend, blob.hash, std::move(blob.payload)};
}

void save_proof(const std::string& path, const ProofBundle& bundle) {
  VectorSink payload;
  payload.u64(bundle.public_values.size());
  uint8_t bytes[32];
  for (const FieldScalar& v : bundle.public_values) {
    v.to_canonical_bytes(bytes);
    payload.bytes(std::span<const uint8_t>(bytes, 32));
  }
  payload.u64(bundle.proof.size());
  payload.bytes(bundle.proof);
  write_blob(path, "ZKPF", bundle.backend, bundle.build_hash, payload.buffer());
}

ProofBundle load_proof(const std::string& path) {
  Blob blob = read_blob(path, "ZKPF");
  ProofBundle bundle;
  bundle.backend = blob.backend;
  bundle.build_hash = blob.hash;
  ByteReader r(blob.payload);
  uint64_t n = r.u64();
  bundle.public_values.reserve(n);
  for (uint64_t i = 0; i < n; ++i) {
    auto v = FieldScalar::from_canonical_bytes(r.bytes(32).data());
    if (!v) throw MalformedFileError(path + ": non-canonical public value");
    bundle.public_values.push_back(*v);
  }
  uint64_t plen = r.u64();
  auto p = r.bytes(plen);
  bundle.proof.assign(p.begin(), p.end());
  if (!r.done()) throw MalformedFileError(path + ": trailing bytes");
  return bundle;
}

}  // namespace zkwm
