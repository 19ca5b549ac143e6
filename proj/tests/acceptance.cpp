// Prints one PASS/FAIL line per acceptance criterion and exits non-zero if
// any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "hssmlab/bench.hpp"
#include "hssmlab/cost_model.hpp"
#include "hssmlab/pipeline.hpp"
#include "hssmlab/seq_circuits.hpp"
#include "oracles.hpp"

using namespace hssmlab;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::vector<std::vector<double>> random_inputs(std::uint64_t seed, int T, std::size_t n = 8) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-0.75, 0.75);
  std::vector<std::vector<double>> xs(T, std::vector<double>(n));
  for (auto& x : xs)
    for (double& v : x) v = u(rng);
  return xs;
}

Outcome level_endpoints() {
  const auto t0 = std::chrono::steady_clock::now();
  const ExecutedRun proj = execute_circuit({CircuitKind::HssmClosed, 8, 8, true});
  const ExecutedRun plain = execute_circuit({CircuitKind::HssmClosed, 8, 8, false});
  const double s = seconds_since(t0);
  char buf[160];
  std::snprintf(buf, sizeof buf, "projected (%d,%d), unprojected (%d,%d), %.3fs", proj.level,
                proj.degree, plain.level, plain.degree, s);
  return {proj.ok && plain.ok && proj.level == 3 && proj.degree == 2 && plain.level == 4 &&
              plain.degree == 2 && s < 1.0,
          buf};
}

Outcome streaming_exhaustion() {
  int good = 0;
  const int seeds = 20;
  for (int seed = 0; seed < seeds; ++seed) {
    RunOptions o;
    o.seed = static_cast<std::uint64_t>(seed);
    const ExecutedRun st = execute_circuit({CircuitKind::HssmStreaming, 8, 8}, o);
    const ExecutedRun cf = execute_circuit({CircuitKind::HssmClosed, 8, 8}, o);
    const ExecutedRun nv = execute_circuit({CircuitKind::Naive, 8, 8}, o);
    if (!st.ok && cf.ok && cf.level >= 3 && !nv.ok && nv.failing_step <= st.failing_step) ++good;
  }
  return {good == seeds, std::to_string(good) + "/" + std::to_string(seeds) + " seeds"};
}

Outcome footprint_exact() {
  const auto t0 = std::chrono::steady_clock::now();
  const bool ok = footprint(1066) == FootprintReport{1, 1066, 2132, 1136356} &&
                  footprint(36).score_units == 1296;
  const double s = seconds_since(t0);
  return {ok && s < 1e-3, "footprint(1066) and footprint(36).scores"};
}

Outcome carry_depth() {
  std::map<int, int> memo;
  bool ok = carry_depth_hssm({}) == 2;
  for (int t = 1; t <= 64; ++t) {
    ok = ok && carry_depth_naive(t, {}) == t + 1 && oracle::carry_depth(t, 1, 2, 0, memo) == t + 1;
  }
  return {ok, "t = 1..64"};
}

Outcome ledger_purity() {
  bool ok = true;
  for (int T : {1, 4, 8, 16, 32}) {
    for (auto kind : {CircuitKind::HssmClosed, CircuitKind::HssmStreaming, CircuitKind::HssmMulti}) {
      const std::size_t K = kind == CircuitKind::HssmMulti ? 6 : 1;
      const ExecutedRun r = execute_circuit({kind, T, 2 * T + 16, false, 8, K});
      ok = ok && r.ok && r.server.mul_ct_ct == static_cast<std::uint64_t>(2 * T);
      for (const auto& row : r.trace.rows) {
        if (row.stage == "carry" || row.stage == "decay_scale" || row.stage == "aggregate" ||
            row.stage == "state_update") {
          ok = ok && row.delta.mul_ct_ct == 0;
        }
      }
    }
  }
  std::vector<double> ratios;
  std::vector<std::uint64_t> full_cc;
  for (int T : {16, 32, 64, 128}) {
    const ExecutedRun full = execute_circuit({CircuitKind::AttnFullSequence, T, 8});
    const ExecutedRun hssm = execute_circuit({CircuitKind::HssmClosed, T, 8});
    ok = ok && full.ok && hssm.ok;
    full_cc.push_back(full.server.mul_ct_ct);
    ratios.push_back(static_cast<double>(full.server.mul_ct_ct) /
                     static_cast<double>(hssm.server.mul_ct_ct));
  }
  for (std::size_t i = 1; i < ratios.size(); ++i) {
    ok = ok && ratios[i] > ratios[i - 1];
    // Doubling T should roughly quadruple a quadratic count.
    const double growth = static_cast<double>(full_cc[i]) / static_cast<double>(full_cc[i - 1]);
    ok = ok && growth > 3.5 && growth < 4.5;
  }
  char buf[160];
  std::snprintf(buf, sizeof buf, "full-seq/hssm ct-ct ratio %.1f -> %.1f -> %.1f -> %.1f",
                ratios[0], ratios[1], ratios[2], ratios[3]);
  return {ok, buf};
}

Outcome numerical_fidelity() {
  SimParams p;
  p.depth_budget = 16;
  double cell_err = 0.0;
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int trial = 0; trial < 100; ++trial) {
    Context c(p);
    std::vector<double> h(8), g(8), w(8);
    for (std::size_t i = 0; i < 8; ++i) {
      h[i] = u(rng);
      g[i] = u(rng);
      w[i] = u(rng);
    }
    const double a = 0.5 + 0.4 * u(rng);
    const CtVector out =
        c.add_cc(c.mul_cp(c.encrypt(h), a), c.mul_cc(c.encrypt(g), c.encrypt(w)));
    for (std::size_t i = 0; i < 8; ++i) {
      cell_err = std::max(cell_err, std::abs(out.slot(i) - (a * h[i] + g[i] * w[i])));
    }
  }

  double pair_err = 0.0;
  HssmParams hp;
  hp.readout = RowReadout::uniform(8, 0.125);
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto in = random_inputs(seed, 4);
    Context a(p), b(p);
    std::vector<CtVector> xa, xb;
    for (const auto& x : in) {
      xa.push_back(a.encrypt(x));
      xb.push_back(b.encrypt(x));
    }
    const auto s = hssm_streaming(a, xa, hp);
    const auto cf = hssm_closed_form_state(b, xb, hp);
    for (std::size_t i = 0; i < 8; ++i) {
      pair_err = std::max(pair_err, std::abs(s.output.slot(i) - cf.output.slot(i)));
    }
  }
  char buf[160];
  std::snprintf(buf, sizeof buf, "cell error 2^%.1f, streaming vs closed 2^%.1f over 100 seeds",
                std::log2(std::max(cell_err, 1e-300)), std::log2(std::max(pair_err, 1e-300)));
  return {cell_err <= std::ldexp(1.0, -40) && pair_err <= std::ldexp(1.0, -35), buf};
}

Outcome exact_match() {
  const auto t0 = std::chrono::steady_clock::now();
  const SyntheticDataset ds = synthetic_dataset(7, 400, 200);
  const VectorTable table = hashed_vectors(ds.vocabulary, 64, 7);
  bool ok = ds.valid.rows.size() == 200;
  std::string detail;
  for (auto kind : {CircuitKind::HssmClosed, CircuitKind::HssmMulti, CircuitKind::AttnFinalToken,
                    CircuitKind::AttnFullSequence}) {
    PipelineConfig cfg;
    cfg.kind = kind;
    const TrainedPipeline model = train_pipeline(ds.train, table, cfg);
    const MatchReport rep = verify_exact_match(ds.valid, table, model);
    ok = ok && rep.match_fraction == 1.0 && rep.min_plain_margin >= std::ldexp(1.0, -20) &&
         rep.exhausted == 0;
    char buf[96];
    std::snprintf(buf, sizeof buf, "%s%s match %.4f", detail.empty() ? "" : ", ",
                  kind_name(kind).c_str(), rep.match_fraction);
    detail += buf;
  }
  const double s = seconds_since(t0);
  char buf[48];
  std::snprintf(buf, sizeof buf, ", %.1fs", s);
  return {ok && s < 30.0, detail + buf};
}

Outcome clip_proxy() {
  const int T = 128;
  const int seeds = 50;
  std::uint64_t nominal = 0, tight_hssm = 0, tight_naive = 0;
  bool all_ran = true;
  for (int seed = 0; seed < seeds; ++seed) {
    for (double clip : {3.0, 1.0}) {
      RunOptions o;
      o.seed = static_cast<std::uint64_t>(seed);
      o.clip_bound = clip;
      const ExecutedRun h = execute_circuit({CircuitKind::HssmStreaming, T, 2 * T + 16}, o);
      const ExecutedRun n = execute_circuit({CircuitKind::Naive, T, 2 * T + 16}, o);
      all_ran = all_ran && h.ok && n.ok;
      if (clip == 3.0) {
        nominal += h.server.clip_events + n.server.clip_events;
      } else {
        tight_hssm += h.server.clip_events;
        tight_naive += n.server.clip_events;
      }
    }
  }
  return {all_ran && nominal == 0 && tight_hssm <= tight_naive,
          "nominal clips " + std::to_string(nominal) + ", tight hssm " +
              std::to_string(tight_hssm) + " vs naive " + std::to_string(tight_naive)};
}

Outcome stress_boundary() {
  const StressBudget calibrated;
  const bool at32 = stress_check(CircuitKind::AttnFullSequence, 32, calibrated).ok;
  const bool at36 = stress_check(CircuitKind::AttnFullSequence, 36, calibrated).ok;
  const bool raised =
      stress_check(CircuitKind::AttnFullSequence, 36, {1296 + kQuadraticOverhead}).ok;
  return {at32 && !at36 && raised, "budget " + std::to_string(calibrated.max_live_ciphertexts)};
}

Outcome prediction_agreement() {
  int checked = 0, mismatched = 0;
  for (auto kind : {CircuitKind::HssmClosed, CircuitKind::HssmStreaming, CircuitKind::HssmMulti,
                    CircuitKind::Naive, CircuitKind::AttnFinalToken,
                    CircuitKind::AttnFullSequence}) {
    for (int T = 1; T <= 32; ++T) {
      for (int depth : {8, 10, 16}) {
        for (bool proj : {false, true}) {
          const CircuitShape s{kind, T, depth, proj, 8,
                               kind == CircuitKind::HssmMulti ? 6u : 1u};
          const LevelPrediction pred = predict_level_trace(s);
          const ExecutedRun run = execute_circuit(s);
          bool same = pred.ok() == run.ok;
          if (same && run.ok) {
            same = pred.level == run.level && pred.degree == run.degree &&
                   same_op_counts(op_count_model(s), run.server);
          } else if (same) {
            same = pred.exhaustion->step == run.failing_step &&
                   pred.exhaustion->stage == run.failing_stage;
          }
          ++checked;
          if (!same) ++mismatched;
        }
      }
    }
  }
  return {mismatched == 0,
          std::to_string(checked) + " shapes, " + std::to_string(mismatched) + " mismatches"};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"level-trace endpoints", level_endpoints},
      {"streaming exhaustion vs closed-form survival", streaming_exhaustion},
      {"footprint exactness", footprint_exact},
      {"carry-depth recurrence", carry_depth},
      {"ledger purity and counts", ledger_purity},
      {"numerical fidelity", numerical_fidelity},
      {"exact-match classification", exact_match},
      {"clip-proxy ordering", clip_proxy},
      {"stress boundary", stress_boundary},
      {"prediction/execution agreement", prediction_agreement},
  };
  int failed = 0;
  int index = 1;
  for (const auto& [name, fn] : criteria) {
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("[%s] %2d %s: %s\n", o.pass ? "PASS" : "FAIL", index++, name, o.detail.c_str());
    std::fflush(stdout);
    if (!o.pass) ++failed;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed,
              criteria.size());
  return failed == 0 ? 0 : 1;
}
