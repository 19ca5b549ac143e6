#include "hssmlab/trace.hpp"

#include "hssmlab/mock_ckks.hpp"

namespace hssmlab {

TraceRecorder::TraceRecorder(const Context& ctx) : ctx_(&ctx), last_(ctx.ledger()) {}

void TraceRecorder::begin(int step, std::string stage) {
  step_ = step;
  stage_ = std::move(stage);
}

void TraceRecorder::record(const CtVector& result) {
  const OpLedger now = ctx_->ledger();
  trace_.rows.push_back({step_, stage_, result.level(), result.degree(), ledger_delta(now, last_)});
  last_ = now;
}

}  // namespace hssmlab
