#include "hssmlab/bench.hpp"

#include <algorithm>
#include <fstream>
#include <ostream>
#include <random>
#include <set>

#include "hssmlab/errors.hpp"
#include "hssmlab/mock_ckks.hpp"
#include "hssmlab/pipeline.hpp"
#include "hssmlab/seq_circuits.hpp"

namespace hssmlab {

namespace {

AffineMap random_map(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> entry(-1.0, 1.0);
  std::uniform_real_distribution<double> shift(-0.1, 0.1);
  AffineMap m;
  m.width = n;
  m.matrix.resize(n * n);
  for (double& v : m.matrix) v = entry(rng) / static_cast<double>(n);
  m.bias.resize(n);
  for (double& v : m.bias) v = shift(rng);
  return m;
}

}  // namespace

ExecutedRun execute_circuit(const CircuitShape& shape, const RunOptions& opts) {
  if (shape.T < 1) {
    throw InvalidParams("T must be >= 1");
  }
  SimParams sp;
  sp.depth_budget = shape.depth;
  sp.scale_bits = opts.scale_bits;
  sp.slot_count = shape.width;
  sp.clip_bound = opts.clip_bound;
  sp.seed = opts.seed;
  Context ctx(sp);

  const std::size_t n = shape.width;
  std::mt19937_64 rng(opts.seed);
  std::uniform_real_distribution<double> input(-opts.input_range, opts.input_range);
  std::vector<CtVector> xs;
  for (int t = 0; t < shape.T; ++t) {
    std::vector<double> v(n);
    for (double& x : v) x = input(rng);
    xs.push_back(ctx.encrypt(v));
  }
  const RowReadout row = RowReadout::uniform(n, 1.0 / static_cast<double>(n));

  ExecutedRun run;
  const OpLedger before = ctx.ledger();
  try {
    CircuitResult result;
    switch (shape.kind) {
      case CircuitKind::HssmClosed:
      case CircuitKind::HssmStreaming:
      case CircuitKind::HssmMulti: {
        HssmParams p;
        p.readout = row;
        if (shape.kind == CircuitKind::HssmMulti) {
          if (shape.decays == 0 || shape.decays > opts.bank.size()) {
            throw InvalidParams("decay count exceeds the configured bank");
          }
          p.decays.assign(opts.bank.begin(), opts.bank.begin() + static_cast<long>(shape.decays));
        } else {
          p.decays = {opts.decay};
        }
        if (shape.with_projection) p.input_proj = random_map(n, rng);
        if (shape.kind == CircuitKind::HssmClosed) {
          result = hssm_closed_form(ctx, xs, p, shape.with_projection);
        } else if (shape.kind == CircuitKind::HssmMulti) {
          result = hssm_multi_decay(ctx, xs, p, shape.with_projection);
        } else {
          result = hssm_streaming(ctx, xs, p, shape.with_projection);
        }
        break;
      }
      case CircuitKind::Naive: {
        NaiveParams p;
        if (shape.with_projection) p.input_proj = random_map(n, rng);
        result = naive_recurrence(ctx, xs, p, shape.with_projection);
        break;
      }
      case CircuitKind::AttnFinalToken:
      case CircuitKind::AttnFullSequence: {
        AttnParams p;
        p.readout = row;
        // Each kernel weight is close to 1, so the denominator sits near T.
        p.denom_center = static_cast<double>(shape.T);
        if (shape.with_projection) {
          p.input_proj = random_map(n, rng);
          p.wq = random_map(n, rng);
          p.wk = random_map(n, rng);
          p.wv = random_map(n, rng);
        }
        const auto mode = shape.kind == CircuitKind::AttnFinalToken ? AttentionMode::FinalToken
                                                                     : AttentionMode::FullSequence;
        result = attention_block(ctx, xs, p, mode, shape.with_projection);
        break;
      }
    }
    run.level = result.output.level();
    run.degree = result.output.degree();
    run.trace = std::move(result.trace);
  } catch (const LevelExhausted& e) {
    run.ok = false;
    run.level = 0;
    run.degree = 2;
    run.failing_step = e.step();
    run.failing_stage = e.stage();
    run.trace = e.partial_trace();
  }
  run.server = ledger_delta(ctx.ledger(), before);
  run.total = ctx.ledger();
  return run;
}

RunReport make_run_report(const CircuitShape& shape, const ExecutedRun& run, std::uint64_t seed,
                          int repeat, const SimCostWeights& weights) {
  RunReport r;
  r.model_kind = kind_name(shape.kind);
  r.T = shape.T;
  r.depth = shape.depth;
  r.with_projection = shape.with_projection;
  r.repeat = repeat;
  r.seed = seed;
  r.status = run.ok ? RunStatus::Ok : RunStatus::LevelExhausted;
  r.status_detail = run.ok ? 0 : run.failing_step;
  r.final_level = run.level;
  r.final_degree = run.degree;
  r.ledger = run.total;
  const auto T = static_cast<std::uint64_t>(shape.T);
  r.footprint = footprint(T);
  r.logical_state_units = logical_state_units(shape.kind, T, shape.decays);
  r.sim_cost = sim_cost(run.server, weights);
  return r;
}

int cmd_trace(const TraceArgs& args, std::ostream& out, std::ostream& err) {
  const ExecutedRun run = execute_circuit(args.shape, args.run);
  write_trace_csv(out, run.trace, run.ok ? RunStatus::Ok : RunStatus::LevelExhausted,
                  run.failing_step);
  if (!run.ok) {
    err << "level exhausted at step " << run.failing_step << " (" << run.failing_stage << ")\n";
    return exit_code::modeled_failure;
  }
  return exit_code::ok;
}

int cmd_bench(const BenchArgs& args, std::ostream& out, std::ostream& err) {
  if (args.kinds.empty() || args.Ts.empty() || args.repeats < 1) {
    err << "bench needs at least one kind, one T and repeats >= 1\n";
    return exit_code::usage;
  }
  // Rows come out sorted by (T, kind order as given, repeat).
  std::vector<int> Ts = args.Ts;
  std::sort(Ts.begin(), Ts.end());
  std::vector<RunReport> rows;
  bool any_failed = false;
  for (int T : Ts) {
    for (CircuitKind kind : args.kinds) {
      CircuitShape shape{kind, T, args.depth, args.with_projection, args.width,
                         kind == CircuitKind::HssmMulti ? args.run.bank.size() : 1};
      for (int rep = 0; rep < args.repeats; ++rep) {
        const ExecutedRun run = execute_circuit(shape, args.run);
        any_failed = any_failed || !run.ok;
        rows.push_back(make_run_report(shape, run, args.run.seed, rep, args.weights));
      }
    }
  }
  write_run_reports(out, rows);
  return any_failed ? exit_code::modeled_failure : exit_code::ok;
}

int cmd_footprint(const std::vector<std::uint64_t>& Ts, std::ostream& out) {
  out << "T,state_units,feature_cache_units,kv_cache_units,score_units\n";
  for (std::uint64_t T : Ts) {
    const FootprintReport f = footprint(T);
    out << T << ',' << f.state_units << ',' << f.feature_cache_units << ',' << f.kv_cache_units
        << ',' << f.score_units << '\n';
  }
  return exit_code::ok;
}

int cmd_depth(const DepthArgs& args, std::ostream& out) {
  out << "t,naive_depth,hssm_depth\n";
  const int hssm = carry_depth_hssm(args.params);
  for (int t = 0; t <= args.t_max; ++t) {
    out << t << ',' << carry_depth_naive(t, args.params) << ',' << hssm << '\n';
  }
  return exit_code::ok;
}

int cmd_stress(const StressArgs& args, std::ostream& out) {
  out << "kind,T,budget,required_units,status\n";
  bool any_oom = false;
  for (std::uint64_t T : args.Ts) {
    const StressResult r = stress_check(args.kind, T, args.budget);
    any_oom = any_oom || !r.ok;
    out << kind_name(args.kind) << ',' << T << ',' << args.budget.max_live_ciphertexts << ','
        << r.required_units << ',' << (r.ok ? "ok" : "modeled_oom") << '\n';
  }
  return any_oom ? exit_code::modeled_failure : exit_code::ok;
}

int cmd_classify(const ClassifyArgs& args, std::ostream& out, std::ostream& err) {
  DatasetSplit train;
  DatasetSplit valid;
  std::vector<std::string> vocabulary;
  if (args.synthetic) {
    SyntheticDataset ds = synthetic_dataset(args.seed);
    train = std::move(ds.train);
    valid = std::move(ds.valid);
    vocabulary = std::move(ds.vocabulary);
  } else if (args.dataset_path) {
    DatasetSplit all = load_dataset_tsv(*args.dataset_path);
    if (args.valid_path) {
      train = std::move(all);
      valid = load_dataset_tsv(*args.valid_path);
    } else {
      // Without a separate validation file the last third is held out.
      const std::size_t cut = all.rows.size() - all.rows.size() / 3;
      train.name = all.name + "-train";
      valid.name = all.name + "-valid";
      train.rows.assign(all.rows.begin(), all.rows.begin() + static_cast<long>(cut));
      valid.rows.assign(all.rows.begin() + static_cast<long>(cut), all.rows.end());
    }
    std::set<std::string> seen;
    for (const auto* split : {&train, &valid}) {
      for (const auto& row : split->rows) {
        for (auto& tok : tokenize(row.text)) seen.insert(std::move(tok));
      }
    }
    vocabulary.assign(seen.begin(), seen.end());
  } else {
    err << "classify needs --synthetic or --dataset\n";
    return exit_code::usage;
  }

  VectorTable table;
  if (args.vectors_path) {
    table = load_vectors(*args.vectors_path);
    for (const auto& w : table.warnings) err << "warning: " << w << '\n';
  } else if (args.hashed) {
    table = hashed_vectors(vocabulary, args.hashed_dim, args.seed);
  } else {
    err << "classify needs --vectors or --hashed\n";
    return exit_code::usage;
  }

  PipelineConfig config;
  config.kind = args.kind;
  config.seed = args.seed;
  config.lambda = args.lambda;
  config.client_side_readout = args.client_side_readout;
  const TrainedPipeline model = train_pipeline(train, table, config);
  const MatchReport report = verify_exact_match(valid, table, model);

  out << match_report_json(report) << '\n';
  if (args.examples_path) {
    std::ofstream csv(*args.examples_path);
    if (!csv) {
      err << "cannot write " << *args.examples_path << '\n';
      return exit_code::io_error;
    }
    write_match_examples_csv(csv, report);
  }
  return report.exhausted > 0 ? exit_code::modeled_failure : exit_code::ok;
}

std::vector<std::pair<std::string, std::string>> load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw MissingInput("cannot open config file '" + path + "'");
  }
  const auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };
  std::vector<std::pair<std::string, std::string>> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw ParseError(lineno, "expected key=value");
    }
    out.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return out;
}

}  // namespace hssmlab
