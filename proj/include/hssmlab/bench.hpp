#pragma once

// Command implementations behind the hssmlab CLI. Each command writes CSV or
// JSON to the given stream and returns a process exit code, so tests can
// drive them without spawning processes.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hssmlab/cost_model.hpp"
#include "hssmlab/ledger.hpp"
#include "hssmlab/report.hpp"
#include "hssmlab/trace.hpp"

namespace hssmlab {

namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int modeled_failure = 2;
inline constexpr int usage = 64;
inline constexpr int data_error = 65;
inline constexpr int missing_input = 66;
inline constexpr int io_error = 74;
}  // namespace exit_code

inline constexpr std::uint64_t kDefaultSeed = 20240611;

/// Outcome of running one circuit on seeded inputs.
struct ExecutedRun {
  bool ok = true;
  int level = 0;
  int degree = 0;
  int failing_step = 0;
  std::string failing_stage;
  StepTrace trace;
  /// Server-side counters only (the client encryptions are excluded).
  OpLedger server;
  /// Whole-context ledger at the end of the run.
  OpLedger total;
};

struct RunOptions {
  std::uint64_t seed = kDefaultSeed;
  int scale_bits = 50;
  double clip_bound = 3.0;
  /// Inputs are drawn uniformly from [-input_range, input_range].
  double input_range = 0.75;
  /// Decays for hssm-multi; the first `shape.decays` entries are used.
  std::vector<double> bank{0.1, 0.25, 0.5, 0.75, 0.9, 0.98};
  /// Decay of the single-track kinds.
  double decay = 0.5;
};

/// Builds seeded inputs and public parameters for `shape` and runs the
/// matching circuit. Level exhaustion is reported, not thrown.
ExecutedRun execute_circuit(const CircuitShape& shape, const RunOptions& opts = {});

RunReport make_run_report(const CircuitShape& shape, const ExecutedRun& run, std::uint64_t seed,
                          int repeat, const SimCostWeights& weights = {});

struct TraceArgs {
  CircuitShape shape;
  RunOptions run;
};
int cmd_trace(const TraceArgs& args, std::ostream& out, std::ostream& err);

struct BenchArgs {
  std::vector<CircuitKind> kinds;
  std::vector<int> Ts;
  int depth = 8;
  bool with_projection = false;
  std::size_t width = 8;
  int repeats = 1;
  RunOptions run;
  SimCostWeights weights;
};
int cmd_bench(const BenchArgs& args, std::ostream& out, std::ostream& err);

int cmd_footprint(const std::vector<std::uint64_t>& Ts, std::ostream& out);

struct DepthArgs {
  int t_max = 16;
  DepthParams params;
};
int cmd_depth(const DepthArgs& args, std::ostream& out);

struct StressArgs {
  CircuitKind kind = CircuitKind::AttnFullSequence;
  std::vector<std::uint64_t> Ts;
  StressBudget budget;
};
int cmd_stress(const StressArgs& args, std::ostream& out);

struct ClassifyArgs {
  std::optional<std::string> dataset_path;
  std::optional<std::string> valid_path;
  bool synthetic = false;
  std::optional<std::string> vectors_path;
  bool hashed = false;
  std::size_t hashed_dim = 64;
  CircuitKind kind = CircuitKind::HssmClosed;
  std::uint64_t seed = kDefaultSeed;
  double lambda = 1.0;
  bool client_side_readout = false;
  std::optional<std::string> examples_path;
};
/// Writes the MatchReport JSON to `out` and the per-example CSV to
/// `examples_path` when given.
int cmd_classify(const ClassifyArgs& args, std::ostream& out, std::ostream& err);

/// key=value lines; blank lines and '#' comments are ignored.
std::vector<std::pair<std::string, std::string>> load_config(const std::string& path);

}  // namespace hssmlab
