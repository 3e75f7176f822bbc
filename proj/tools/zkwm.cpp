// zkwm: embed an activation watermark into a small model, compile the
// extraction procedure to R1CS, and prove/verify ownership without revealing
// the trigger keys, projection matrix, or signature bits.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <optional>
#include <fstream>
#include <string>

#include <CLI11.hpp>

#include "zkwm/backend.hpp"
#include "zkwm/bench_circuits.hpp"
#include "zkwm/compiler.hpp"
#include "zkwm/errors.hpp"
#include "zkwm/io.hpp"
#include "zkwm/nn.hpp"

using namespace zkwm;

namespace {

double now_ms() {
  return std::chrono::duration<double, std::milli>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

FixedPointFormat parse_format(const std::string& text) {
  FixedPointFormat fmt;
  if (std::sscanf(text.c_str(), "%u:%u", &fmt.frac_bits, &fmt.total_bits) != 2 ||
      fmt.frac_bits == 0 || fmt.frac_bits >= fmt.total_bits)
    throw Error("bad --format, expected f:W such as 16:48");
  return fmt;
}

Dataset load_dataset_selector(const std::string& selector, uint64_t seed,
                              uint32_t dim) {
  if (selector == "blobs") return make_blobs(seed, dim, 4, 128);
  if (selector == "digits") return make_digits(seed, 24);
  if (selector.rfind("file:", 0) == 0) return load_dataset(selector.substr(5));
  throw Error("unknown dataset selector: " + selector);
}

ModelSpec desk_spec(const Dataset& data, const std::vector<uint32_t>& hidden) {
  if (data.inputs.empty()) throw Error("dataset is empty");
  ModelSpec spec;
  spec.input_shape = data.inputs[0].shape;
  for (uint32_t width : hidden) {
    spec.layers.push_back(DenseLayer{width});
    spec.layers.push_back(ReluLayer{});
  }
  spec.layers.push_back(DenseLayer{data.num_classes});
  return spec;
}

BackendKind parse_backend(const std::string& name) {
  if (name == "check") return BackendKind::kCheck;
  if (name == "groth16") return BackendKind::kGroth16;
  throw Error("unknown backend: " + name);
}

std::unique_ptr<ProofBackend> require_backend(BackendKind kind) {
  auto backend = make_backend(kind);
  if (!backend)
    throw Error(std::string(backend_name(kind)) +
                " backend is not available in this build");
  return backend;
}

int cmd_embed(const std::string& dataset_sel, uint64_t seed,
              const std::string& model_path, const std::string& key_path,
              uint32_t bits, uint32_t layer, double theta, uint32_t cls,
              double lambda, uint32_t train_epochs, uint32_t embed_epochs,
              const std::string& format_text,
              const std::vector<uint32_t>& hidden) {
  FixedPointFormat fmt = parse_format(format_text);
  Dataset data = load_dataset_selector(dataset_sel, seed, 64);
  ModelSpec spec = desk_spec(data, hidden);
  std::printf("architecture: %s\n", spec.describe().c_str());

  TrainConfig tc;
  tc.epochs = train_epochs;
  tc.seed = seed;
  ModelWeights baseline = train_baseline(spec, data, tc);
  double base_acc = accuracy(spec, baseline, data);

  WatermarkKey key =
      make_watermark_key(spec, data, cls, layer, bits, theta, seed);
  EmbedConfig ec;
  ec.lambda_wm = lambda;
  ec.epochs = embed_epochs;
  ModelWeights marked = embed_watermark(spec, baseline, data, key, ec, seed);
  double marked_acc = accuracy(spec, marked, data);

  ExtractionTrace trace = extract_plaintext(spec, marked, key);
  std::printf("accuracy: baseline %.4f, watermarked %.4f\n", base_acc,
              marked_acc);
  std::printf("BER: %.4f\n", trace.ber);

  save_model(model_path, {spec, marked, fmt, seed});
  save_key(key_path, key, spec.input_shape);
  std::printf("wrote %s and %s\n", model_path.c_str(), key_path.c_str());
  return 0;
}

int cmd_compile(const std::string& model_path, const std::string& key_path,
                const std::string& circuit_path) {
  ModelFile model = load_model(model_path);
  WatermarkKey key = load_key(key_path);
  double t0 = now_ms();
  CircuitArtifact artifact = compile_extraction(
      model.spec, model.format, key.embedded_layer,
      (uint32_t)key.wm_bits.size(), (uint32_t)key.trigger_inputs.size(),
      key.theta);
  double t1 = now_ms();
  Stats s = artifact.cs.stats();
  std::printf("constraints: %llu  public: %llu  private: %llu  (%.1f ms)\n",
              (unsigned long long)s.num_constraints,
              (unsigned long long)s.num_public,
              (unsigned long long)s.num_private, t1 - t0);
  std::printf("build hash: %s\n", digest_hex(artifact.meta.build_hash).c_str());
  save_circuit(circuit_path, artifact);
  std::printf("wrote %s (+ .json sidecar)\n", circuit_path.c_str());
  return 0;
}

int cmd_setup(const std::string& circuit_path, const std::string& pk_path,
              const std::string& vk_path, const std::string& backend_name_opt,
              uint64_t seed) {
  CircuitArtifact artifact = load_circuit(circuit_path);
  auto backend = require_backend(parse_backend(backend_name_opt));
  if (backend->kind() == BackendKind::kGroth16)
    std::fprintf(stderr,
                 "warning: seeded trusted-setup stand-in; INSECURE outside "
                 "testing\n");
  double t0 = now_ms();
  auto [pk, vk] = backend->setup(artifact.cs, seed);
  double t1 = now_ms();
  save_prover_key(pk_path, pk);
  save_verifier_key(vk_path, vk);
  std::printf("setup: %.1f ms  pk: %zu B  vk: %zu B\n", t1 - t0,
              pk.payload.size(), vk.payload.size());
  return 0;
}

int cmd_prove(const std::string& circuit_path, const std::string& model_path,
              const std::string& key_path, const std::string& pk_path,
              const std::string& proof_path, std::optional<uint64_t> seed) {
  CircuitArtifact artifact = load_circuit(circuit_path);
  ModelFile model = load_model(model_path);
  WatermarkKey key = load_key(key_path);
  ProverKey pk = load_prover_key(pk_path);
  if (pk.build_hash != artifact.meta.build_hash)
    throw KeyMismatchError("prover key does not match the circuit");
  auto backend = require_backend(pk.backend);
  if (seed) backend->set_prove_seed(*seed);

  AssignedValues values = assign_extraction(artifact, model.weights, key);
  std::printf("output slot: %d\n", values.output_bit ? 1 : 0);
  double t0 = now_ms();
  ProofBundle bundle = backend->prove(pk, artifact.cs, values.assignment);
  double t1 = now_ms();
  save_proof(proof_path, bundle);
  std::printf("prove: %.1f ms  proof: %zu B\n", t1 - t0, bundle.proof.size());
  return 0;
}

int cmd_verify(const std::string& vk_path, const std::string& proof_path,
               const std::string& circuit_path) {
  VerifierKey vk = load_verifier_key(vk_path);
  ProofBundle bundle = load_proof(proof_path);
  if (vk.build_hash != bundle.build_hash)
    throw KeyMismatchError("proof does not match the verifier key");
  auto backend = require_backend(vk.backend);

  CircuitArtifact artifact;
  const ConstraintSystem* cs = nullptr;
  if (backend->kind() == BackendKind::kCheck) {
    if (circuit_path.empty())
      throw Error("the check backend needs --circuit to re-evaluate");
    artifact = load_circuit(circuit_path);
    cs = &artifact.cs;
  }
  double t0 = now_ms();
  bool ok = backend->verify(vk, bundle, cs);
  double t1 = now_ms();
  // The proven statement is "the extraction circuit is satisfied"; ownership
  // additionally requires the public output slot to carry 1.
  bool output_one = false;
  if (ok) {
    // Output slot is the last public input by construction; confirm via the
    // sidecar layout when a circuit is at hand, else trust position.
    if (cs) {
      for (const LayoutBlock& block : artifact.meta.public_layout)
        if (block.name == "output")
          output_one = !bundle.public_values.at(block.offset).is_zero();
    } else if (!bundle.public_values.empty()) {
      output_one = !bundle.public_values.back().is_zero();
    }
  }
  bool accept = ok && output_one;
  std::printf("%s (verify %.2f ms, proof valid: %s, output slot: %d)\n",
              accept ? "accept" : "reject", t1 - t0, ok ? "yes" : "no",
              ok ? (output_one ? 1 : 0) : 0);
  return accept ? 0 : 1;
}

int cmd_drift(const std::string& model_path, const std::string& key_path,
              const std::string& format_text) {
  ModelFile model = load_model(model_path);
  WatermarkKey key = load_key(key_path);
  FixedPointFormat fmt =
      format_text.empty() ? model.format : parse_format(format_text);
  DriftReport report =
      quantization_drift_report(model.spec, model.weights, key, fmt);
  std::printf("%-14s %s\n", "stage", "max |real - fixed|");
  for (const DriftStage& stage : report.stages)
    std::printf("%-14s %.3e\n", stage.stage.c_str(), stage.max_abs_deviation);
  std::printf("extracted bits %s\n",
              report.bits_differ ? "DIFFER" : "identical");
  return report.bits_differ ? 1 : 0;
}

struct BenchRow {
  std::string name;
  uint64_t constraints = 0;
  double setup_ms = 0, prove_ms = 0, verify_ms = 0;
  size_t pk_bytes = 0, vk_bytes = 0, proof_bytes = 0;
  std::string reference;
};

BenchRow bench_circuit(ProofBackend& backend, const std::string& name,
                       const ConstraintSystem& cs, const Assignment& assignment,
                       uint64_t seed) {
  BenchRow row;
  row.name = name;
  row.constraints = cs.stats().num_constraints;
  double t0 = now_ms();
  auto [pk, vk] = backend.setup(cs, seed);
  double t1 = now_ms();
  ProofBundle bundle = backend.prove(pk, cs, assignment);
  double t2 = now_ms();
  bool ok = backend.verify(vk, bundle, &cs);
  double t3 = now_ms();
  if (!ok) throw Error("bench: verification failed on " + name);
  row.setup_ms = t1 - t0;
  row.prove_ms = t2 - t1;
  row.verify_ms = t3 - t2;
  row.pk_bytes = pk.payload.size();
  row.vk_bytes = vk.payload.size();
  row.proof_bytes = bundle.proof.size();
  return row;
}

int cmd_bench(const std::string& rows_csv, const std::string& backend_sel,
              const std::string& json_path, uint32_t matmul_n, uint64_t seed) {
  auto backend = require_backend(parse_backend(backend_sel));
  FixedPointFormat fmt;
  std::vector<BenchRow> rows;
  auto want = [&](const std::string& n) {
    return rows_csv == "all" ||
           ("," + rows_csv + ",").find("," + n + ",") != std::string::npos;
  };

  if (want("matmul")) {
    auto g = bench::build_matmul(matmul_n, fmt, seed);
    auto row = bench_circuit(*backend, g.name, g.cs, g.assignment, seed);
    if (matmul_n == 128) row.reference = "1,097,344";
    rows.push_back(row);
  }
  if (want("conv3d")) {
    auto g = bench::build_conv3d(32, 32, 3, 32, 3, 2, fmt, seed);
    rows.push_back(bench_circuit(*backend, g.name, g.cs, g.assignment, seed));
  }
  if (want("relu")) {
    auto g = bench::build_relu(128, fmt, seed);
    rows.push_back(bench_circuit(*backend, g.name, g.cs, g.assignment, seed));
  }
  if (want("average2d")) {
    auto g = bench::build_average(128, 128, fmt, seed);
    rows.push_back(bench_circuit(*backend, g.name, g.cs, g.assignment, seed));
  }
  if (want("sigmoid")) {
    auto g = bench::build_sigmoid(128, fmt, seed);
    rows.push_back(bench_circuit(*backend, g.name, g.cs, g.assignment, seed));
  }
  if (want("hardthreshold")) {
    auto g = bench::build_hard_threshold(128, fmt, seed);
    rows.push_back(bench_circuit(*backend, g.name, g.cs, g.assignment, seed));
  }
  if (want("ber")) {
    auto g = bench::build_ber(128, 0.1, fmt, seed);
    rows.push_back(bench_circuit(*backend, g.name, g.cs, g.assignment, seed));
  }
  if (want("mlp")) {
    Dataset data = make_blobs(seed, 64, 4, 64);
    ModelSpec spec = desk_spec(data, {32, 16});
    ModelWeights weights = init_weights(spec, seed);
    WatermarkKey key = make_watermark_key(spec, data, 0, 1, 32, 0.0, seed);
    CircuitArtifact artifact =
        compile_extraction(spec, fmt, 1, 32, (uint32_t)key.trigger_inputs.size(),
                           0.0);
    AssignedValues values = assign_extraction(artifact, weights, key);
    rows.push_back(bench_circuit(*backend, "mlp-e2e", artifact.cs,
                                 values.assignment, seed));
  }

  std::printf("%-14s %12s %11s %11s %11s %10s %10s %9s  %s\n", "circuit",
              "constraints", "setup(ms)", "prove(ms)", "verify(ms)", "pk(B)",
              "vk(B)", "proof(B)", "reference #constraints");
  for (const BenchRow& r : rows)
    std::printf("%-14s %12llu %11.1f %11.1f %11.3f %10zu %10zu %9zu  %s\n",
                r.name.c_str(), (unsigned long long)r.constraints, r.setup_ms,
                r.prove_ms, r.verify_ms, r.pk_bytes, r.vk_bytes, r.proof_bytes,
                r.reference.empty() ? "-" : r.reference.c_str());

  if (!json_path.empty()) {
    std::ofstream out(json_path, std::ios::trunc);
    for (const BenchRow& r : rows)
      out << "{\"circuit\":\"" << r.name << "\",\"constraints\":"
          << r.constraints << ",\"setup_ms\":" << r.setup_ms
          << ",\"prove_ms\":" << r.prove_ms << ",\"verify_ms\":" << r.verify_ms
          << ",\"pk_bytes\":" << r.pk_bytes << ",\"vk_bytes\":" << r.vk_bytes
          << ",\"proof_bytes\":" << r.proof_bytes
          << (r.reference.empty()
                  ? std::string("")
                  : ",\"reference_constraints\":\"" + r.reference + "\"")
          << "}\n";
    std::printf("wrote %s\n", json_path.c_str());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  // ZKWM_THREADS caps prover parallelism, including the Groth16 library's
  // worker pool, unless the caller already pinned it.
  if (const char* threads = std::getenv("ZKWM_THREADS"))
    setenv("RAYON_NUM_THREADS", threads, 0);

  CLI::App app{"zkwm: zero-knowledge proof of model ownership via activation "
               "watermarks"};
  app.require_subcommand(1);

  // embed
  auto* embed = app.add_subcommand(
      "embed", "train, embed a watermark, write model and key files");
  std::string dataset = "blobs", model_path, key_path, format_text = "16:48";
  uint64_t seed = 0;
  uint32_t bits = 32, layer = 1, cls = 0, train_epochs = 40, embed_epochs = 30;
  double theta = 0.0, lambda = 1.0;
  std::vector<uint32_t> hidden = {32, 16};
  embed->add_option("--dataset", dataset, "blobs, digits, or file:PATH");
  embed->add_option("--seed", seed, "training/key seed")->required();
  embed->add_option("--model", model_path, "output model file")->required();
  embed->add_option("--key", key_path, "output watermark key file")->required();
  embed->add_option("--bits", bits, "signature length B");
  embed->add_option("--layer", layer, "embedded layer l_wm (1 = first layer output)");
  embed->add_option("--theta", theta, "target BER threshold");
  embed->add_option("--class", cls, "carrier class label s");
  embed->add_option("--lambda", lambda, "embedding loss weight");
  embed->add_option("--train-epochs", train_epochs, "baseline epochs");
  embed->add_option("--embed-epochs", embed_epochs, "fine-tune epochs");
  embed->add_option("--format", format_text, "fixed-point format f:W");
  embed->add_option("--hidden", hidden, "hidden layer widths");

  // compile
  auto* compile = app.add_subcommand(
      "compile", "compile the extraction circuit for a model/key pair");
  std::string circuit_path;
  compile->add_option("--model", model_path, "model file")->required();
  compile->add_option("--key", key_path, "watermark key file")->required();
  compile->add_option("--circuit", circuit_path, "output circuit file")
      ->required();

  // setup
  auto* setup = app.add_subcommand("setup", "generate prover/verifier keys");
  std::string pk_path, vk_path, backend_sel = "check";
  setup->add_option("--circuit", circuit_path, "circuit file")->required();
  setup->add_option("--pk", pk_path, "output prover key")->required();
  setup->add_option("--vk", vk_path, "output verifier key")->required();
  setup->add_option("--backend", backend_sel, "check or groth16");
  setup->add_option("--seed", seed, "ceremony seed (stand-in)");

  // prove
  auto* prove = app.add_subcommand("prove", "generate an ownership proof");
  std::string proof_path;
  prove->add_option("--circuit", circuit_path, "circuit file")->required();
  prove->add_option("--model", model_path, "model file (public input)")
      ->required();
  prove->add_option("--key", key_path, "watermark key file (witness)")
      ->required();
  prove->add_option("--pk", pk_path, "prover key")->required();
  prove->add_option("--proof", proof_path, "output proof file")->required();
  std::optional<uint64_t> prove_seed;
  prove->add_option("--seed", prove_seed,
                    "pin proof randomness for reproducible runs");

  // verify
  auto* verify = app.add_subcommand("verify", "verify an ownership proof");
  verify->add_option("--vk", vk_path, "verifier key")->required();
  verify->add_option("--proof", proof_path, "proof file")->required();
  verify->add_option("--circuit", circuit_path,
                     "circuit file (check backend only)");

  // bench
  auto* bench_cmd =
      app.add_subcommand("bench", "per-circuit constraint counts and timings");
  std::string rows = "all", json_path;
  uint32_t matmul_n = 128;
  bench_cmd->add_option("--rows", rows, "comma-separated circuit list or all");
  bench_cmd->add_option("--backend", backend_sel, "check or groth16");
  bench_cmd->add_option("--json", json_path, "also write JSON lines here");
  bench_cmd->add_option("--matmul-n", matmul_n, "matmul dimension");
  bench_cmd->add_option("--seed", seed, "input seed");

  // drift
  auto* drift = app.add_subcommand(
      "drift", "compare real and fixed-point extraction stage by stage");
  drift->add_option("--model", model_path, "model file")->required();
  drift->add_option("--key", key_path, "watermark key file")->required();
  std::string drift_format;
  drift->add_option("--format", drift_format, "fixed-point format f:W");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (embed->parsed())
      return cmd_embed(dataset, seed, model_path, key_path, bits, layer, theta,
                       cls, lambda, train_epochs, embed_epochs, format_text,
                       hidden);
    if (compile->parsed()) return cmd_compile(model_path, key_path, circuit_path);
    if (setup->parsed())
      return cmd_setup(circuit_path, pk_path, vk_path, backend_sel, seed);
    if (prove->parsed())
      return cmd_prove(circuit_path, model_path, key_path, pk_path, proof_path,
                       prove_seed);
    if (verify->parsed()) return cmd_verify(vk_path, proof_path, circuit_path);
    if (bench_cmd->parsed())
      return cmd_bench(rows, backend_sel, json_path, matmul_n, seed);
    if (drift->parsed()) return cmd_drift(model_path, key_path, drift_format);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 2;
}
