// hssmlab command-line front end.
//
// Exit codes: 0 ok, 2 modeled failure (level exhaustion or modeled OOM, with
// partial output still written), 64 usage, 65 malformed input, 66 missing
// input, 74 output not writable.

#include <CLI11.hpp>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "hssmlab/bench.hpp"
#include "hssmlab/errors.hpp"

namespace {

using namespace hssmlab;

// Splices key=value pairs from --config into the argument list right after
// the subcommand, skipping keys the user already passed as flags.
std::vector<std::string> apply_config(std::vector<std::string> args) {
  std::string path;
  for (std::size_t i = 1; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      path = args[i + 1];
      args.erase(args.begin() + static_cast<long>(i), args.begin() + static_cast<long>(i) + 2);
      break;
    }
    if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
      args.erase(args.begin() + static_cast<long>(i));
      break;
    }
  }
  if (path.empty() || args.size() < 2) {
    return args;
  }
  std::vector<std::string> extra;
  for (const auto& [key, value] : load_config(path)) {
    const std::string flag = "--" + key;
    bool given = false;
    for (const auto& a : args) {
      given = given || a == flag || a.rfind(flag + "=", 0) == 0;
    }
    if (!given) extra.push_back(flag + "=" + value);
  }
  args.insert(args.begin() + 2, extra.begin(), extra.end());
  return args;
}

CircuitKind kind_or_throw(const std::string& s) {
  try {
    return parse_kind(s);
  } catch (const InvalidParams& e) {
    throw CLI::ValidationError("--kind", e.what());
  }
}

// Runs `body` with output going to `path`, or stdout when empty.
template <class Body>
int with_output(const std::string& path, Body&& body) {
  if (path.empty() || path == "-") {
    return body(std::cout);
  }
  std::ofstream file(path);
  if (!file) {
    std::cerr << "cannot write " << path << '\n';
    return exit_code::io_error;
  }
  return body(file);
}

std::uint64_t default_seed() {
  if (const char* env = std::getenv("HSSMLAB_SEED")) {
    try {
      return std::stoull(env);
    } catch (const std::exception&) {
      std::cerr << "ignoring malformed HSSMLAB_SEED='" << env << "'\n";
    }
  }
  return kDefaultSeed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Homomorphic state space model laboratory: traces, op-count benches, footprint "
               "and stress models, encrypted classification"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every command");
  std::string config_note;
  app.add_option("--config", config_note, "key=value file of default flag values");

  std::string out_path;
  const std::uint64_t seed0 = default_seed();

  // trace
  TraceArgs trace;
  trace.run.seed = seed0;
  std::string trace_kind;
  auto* c_trace = app.add_subcommand("trace", "Emit the per-stage level trace of one circuit");
  c_trace->add_option("--kind", trace_kind, "hssm-closed|hssm-streaming|hssm-multi|naive|final-token|full-seq")
      ->required();
  c_trace->add_option("--T", trace.shape.T, "Sequence length")->check(CLI::PositiveNumber);
  c_trace->add_option("--depth", trace.shape.depth, "Depth budget")->check(CLI::PositiveNumber);
  c_trace->add_flag("--project", trace.shape.with_projection, "Evaluate the input projection homomorphically");
  c_trace->add_option("--width", trace.shape.width, "Slot count");
  c_trace->add_option("--decays", trace.shape.decays, "Decay tracks for hssm-multi");
  c_trace->add_option("--seed", trace.run.seed, "Input seed");
  c_trace->add_option("--clip", trace.run.clip_bound, "Clip bound");
  c_trace->add_option("--scale-bits", trace.run.scale_bits, "Fixed-point scale bits");
  c_trace->add_option("--out", out_path, "Output CSV (default stdout)");

  // bench
  BenchArgs bench;
  bench.run.seed = seed0;
  std::vector<std::string> bench_kinds{"hssm", "final-token", "full-seq"};
  bench.Ts = {16};
  auto* c_bench = app.add_subcommand("bench", "Run circuits and emit one RunReport row per run");
  c_bench->add_option("--kinds", bench_kinds, "Comma-separated circuit kinds")->delimiter(',');
  c_bench->add_option("--T", bench.Ts, "Comma-separated sequence lengths")->delimiter(',');
  c_bench->add_option("--depth", bench.depth, "Depth budget")->check(CLI::PositiveNumber);
  c_bench->add_flag("--project", bench.with_projection, "Homomorphic input projection");
  c_bench->add_option("--width", bench.width, "Slot count");
  c_bench->add_option("--repeats", bench.repeats, "Rows per (kind, T)")->check(CLI::PositiveNumber);
  c_bench->add_option("--seed", bench.run.seed, "Input seed");
  c_bench->add_option("--w-mul-ct-ct", bench.weights.mul_ct_ct, "sim_cost weight");
  c_bench->add_option("--w-mul-ct-pt", bench.weights.mul_ct_pt, "sim_cost weight");
  c_bench->add_option("--w-rotate", bench.weights.rotate, "sim_cost weight");
  c_bench->add_option("--w-add", bench.weights.add, "sim_cost weight");
  c_bench->add_option("--w-rescale", bench.weights.rescale, "sim_cost weight");
  c_bench->add_option("--out", out_path, "Output CSV (default stdout)");

  // footprint
  std::vector<std::uint64_t> fp_Ts{3, 36, 1066};
  auto* c_fp = app.add_subcommand("footprint", "Logical ciphertext units per T");
  c_fp->add_option("--T", fp_Ts, "Comma-separated sequence lengths")->delimiter(',');
  c_fp->add_option("--out", out_path, "Output CSV (default stdout)");

  // depth
  DepthArgs depth;
  auto* c_depth = app.add_subcommand("depth", "Carry-depth curves, naive versus public decay");
  c_depth->add_option("--t-max", depth.t_max, "Last step")->check(CLI::NonNegativeNumber);
  c_depth->add_option("--d-g", depth.params.d_g, "Gate depth");
  c_depth->add_option("--d-w", depth.params.d_w, "Write depth");
  c_depth->add_option("--d-h0", depth.params.d_h0, "Initial state depth");
  c_depth->add_option("--out", out_path, "Output CSV (default stdout)");

  // stress
  StressArgs stress;
  std::string stress_kind = "quad-attn";
  stress.Ts = {32, 36};
  auto* c_stress = app.add_subcommand("stress", "Live-ciphertext budget check per T");
  c_stress->add_option("--kind", stress_kind, "quad-attn|final-token|hssm");
  c_stress->add_option("--T", stress.Ts, "Comma-separated sequence lengths")->delimiter(',');
  c_stress->add_option("--budget", stress.budget.max_live_ciphertexts, "Max live ciphertexts")
      ->check(CLI::PositiveNumber);
  c_stress->add_option("--out", out_path, "Output CSV (default stdout)");

  // classify
  ClassifyArgs cls;
  cls.seed = seed0;
  std::string dataset, valid, vectors, examples, model = "hssm";
  auto* c_cls = app.add_subcommand("classify", "Train, encrypt, evaluate and verify decisions");
  c_cls->add_option("--dataset", dataset, "TSV dataset (label<TAB>text)");
  c_cls->add_option("--valid", valid, "Separate validation TSV");
  c_cls->add_flag("--synthetic", cls.synthetic, "Use the seeded synthetic dataset");
  c_cls->add_option("--vectors", vectors, "Word-vector text file");
  c_cls->add_flag("--hashed", cls.hashed, "Seeded pseudo-embeddings instead of a vector file");
  c_cls->add_option("--dim", cls.hashed_dim, "Pseudo-embedding dimension");
  c_cls->add_option("--model", model, "hssm|hssm-multi|final-token|full-seq");
  c_cls->add_option("--seed", cls.seed, "Seed for data, projection and embeddings");
  c_cls->add_option("--lambda", cls.lambda, "Ridge regularizer");
  c_cls->add_flag("--client-readout", cls.client_side_readout, "Apply the readout after decryption");
  c_cls->add_option("--examples", examples, "Per-example CSV path");
  c_cls->add_option("--out", out_path, "Output JSON (default stdout)");

  std::vector<std::string> args(argv, argv + argc);
  try {
    args = apply_config(std::move(args));
  } catch (const MissingInput& e) {
    std::cerr << e.what() << '\n';
    return exit_code::missing_input;
  } catch (const ParseError& e) {
    std::cerr << "config " << e.what() << '\n';
    return exit_code::usage;
  }
  std::vector<char*> cargs;
  for (auto& a : args) cargs.push_back(a.data());

  try {
    app.parse(static_cast<int>(cargs.size()), cargs.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return exit_code::usage;
  }

  try {
    if (c_trace->parsed()) {
      trace.shape.kind = kind_or_throw(trace_kind);
      if (trace.shape.kind == CircuitKind::HssmMulti && trace.shape.decays == 1) {
        trace.shape.decays = trace.run.bank.size();
      }
      return with_output(out_path, [&](std::ostream& o) { return cmd_trace(trace, o, std::cerr); });
    }
    if (c_bench->parsed()) {
      for (const auto& k : bench_kinds) bench.kinds.push_back(kind_or_throw(k));
      return with_output(out_path, [&](std::ostream& o) { return cmd_bench(bench, o, std::cerr); });
    }
    if (c_fp->parsed()) {
      return with_output(out_path, [&](std::ostream& o) { return cmd_footprint(fp_Ts, o); });
    }
    if (c_depth->parsed()) {
      return with_output(out_path, [&](std::ostream& o) { return cmd_depth(depth, o); });
    }
    if (c_stress->parsed()) {
      stress.kind = kind_or_throw(stress_kind);
      return with_output(out_path, [&](std::ostream& o) { return cmd_stress(stress, o); });
    }
    if (c_cls->parsed()) {
      cls.kind = kind_or_throw(model);
      if (!dataset.empty()) cls.dataset_path = dataset;
      if (!valid.empty()) cls.valid_path = valid;
      if (!vectors.empty()) cls.vectors_path = vectors;
      if (!examples.empty()) cls.examples_path = examples;
      return with_output(out_path, [&](std::ostream& o) { return cmd_classify(cls, o, std::cerr); });
    }
  } catch (const CLI::ValidationError& e) {
    std::cerr << e.what() << '\n';
    return exit_code::usage;
  } catch (const MissingInput& e) {
    std::cerr << e.what() << '\n';
    return exit_code::missing_input;
  } catch (const ParseError& e) {
    std::cerr << e.what() << '\n';
    return exit_code::data_error;
  } catch (const InvalidParams& e) {
    std::cerr << e.what() << '\n';
    return exit_code::usage;
  } catch (const Error& e) {
    std::cerr << e.what() << '\n';
    return 1;
  }
  return exit_code::usage;
}
