#pragma once

#include <string>
#include <vector>

#include "hssmlab/ledger.hpp"

namespace hssmlab {

class Context;
class CtVector;

/// One recorded stage of a circuit. `step` is 1-based for per-position
/// stages and 0 for stages outside the sequence loop.
struct TraceRow {
  int step = 0;
  std::string stage;
  int level = 0;
  int degree = 0;
  OpLedger delta;
};

struct StepTrace {
  std::vector<TraceRow> rows;

  bool empty() const { return rows.empty(); }
  const TraceRow& back() const { return rows.back(); }
};

/// Appends trace rows with ledger deltas relative to the previous row, and
/// remembers the stage currently executing so exhaustion can be attributed.
class TraceRecorder {
 public:
  explicit TraceRecorder(const Context& ctx);

  void begin(int step, std::string stage);
  void record(const CtVector& result);

  int step() const { return step_; }
  const std::string& stage() const { return stage_; }
  StepTrace& trace() { return trace_; }
  StepTrace take() { return std::move(trace_); }

 private:
  const Context* ctx_;
  OpLedger last_;
  int step_ = 0;
  std::string stage_;
  StepTrace trace_;
};

}  // namespace hssmlab
