#include "hssmlab/cost_model.hpp"

#include <algorithm>
#include <bit>
#include <map>
#include <vector>

#include "hssmlab/errors.hpp"

namespace hssmlab {

int carry_depth_naive(int t, const DepthParams& p) {
  if (t < 0) {
    throw InvalidParams("t must be non-negative");
  }
  int d = p.d_h0;
  for (int i = 1; i <= t; ++i) {
    d = std::max(std::max(p.d_g, d) + 1, p.d_w);
  }
  return d;
}

int carry_depth_hssm(const DepthParams& p) { return std::max(p.d_w, p.d_h0); }

FootprintReport footprint(std::uint64_t T) {
  if (T == 0) {
    throw InvalidParams("footprint needs T >= 1");
  }
  return {1, T, 2 * T, T * T};
}

namespace {

const std::map<std::string, CircuitKind>& kind_table() {
  static const std::map<std::string, CircuitKind> table{
      {"hssm-closed", CircuitKind::HssmClosed},
      {"hssm", CircuitKind::HssmClosed},
      {"hssm-streaming", CircuitKind::HssmStreaming},
      {"hssm-multi", CircuitKind::HssmMulti},
      {"multi", CircuitKind::HssmMulti},
      {"naive", CircuitKind::Naive},
      {"final-token", CircuitKind::AttnFinalToken},
      {"final", CircuitKind::AttnFinalToken},
      {"full-seq", CircuitKind::AttnFullSequence},
      {"full", CircuitKind::AttnFullSequence},
      {"quad-attn", CircuitKind::AttnFullSequence},
  };
  return table;
}

}  // namespace

std::string kind_name(CircuitKind kind) {
  switch (kind) {
    case CircuitKind::HssmClosed: return "hssm-closed";
    case CircuitKind::HssmStreaming: return "hssm-streaming";
    case CircuitKind::HssmMulti: return "hssm-multi";
    case CircuitKind::Naive: return "naive";
    case CircuitKind::AttnFinalToken: return "final-token";
    case CircuitKind::AttnFullSequence: return "full-seq";
  }
  return "unknown";
}

CircuitKind parse_kind(const std::string& name) {
  const auto it = kind_table().find(name);
  if (it == kind_table().end()) {
    throw InvalidParams("unknown circuit kind '" + name + "'");
  }
  return it->second;
}

bool is_attention(CircuitKind kind) {
  return kind == CircuitKind::AttnFinalToken || kind == CircuitKind::AttnFullSequence;
}

// ---------------------------------------------------------------------------
// Level-trace prediction

namespace {

struct Meta {
  int level;
  int degree;
};

struct Exhausted {};

// Metadata-only replay of the simulator's alignment rules. The circuit
// walkers below mirror the stage order of the executed circuits, so a
// failure is reported at the same (step, stage).
class MetaSim {
 public:
  explicit MetaSim(int depth) : depth_(depth) {}

  Meta fresh() const { return {depth_, 1}; }

  void begin(int step, const char* stage) {
    step_ = step;
    stage_ = stage;
  }
  int step() const { return step_; }
  const std::string& stage() const { return stage_; }

  static Meta norm(Meta m) {
    if (m.degree == 1) {
      return m;
    }
    if (m.level == 0) {
      throw Exhausted{};
    }
    return {m.level - 1, 1};
  }
  static Meta mul(Meta a, Meta b) {
    a = norm(a);
    b = norm(b);
    return {std::min(a.level, b.level), 2};
  }
  static Meta mul_plain(Meta a) { return {norm(a).level, 2}; }
  static Meta add(Meta a, Meta b) {
    if (a.degree != b.degree) {
      (a.degree == 2 ? a : b) = norm(a.degree == 2 ? a : b);
    }
    return {std::min(a.level, b.level), a.degree};
  }

 private:
  int depth_;
  int step_ = 0;
  std::string stage_;
};

Meta gate_write_meta(Meta x) {
  const Meta x1 = MetaSim::norm(x);
  const Meta s1 = MetaSim::norm(MetaSim::mul(x1, x1));
  return MetaSim::add(MetaSim::mul_plain(x1), MetaSim::mul_plain(s1));
}

Meta matvec_meta(Meta x) { return MetaSim::mul_plain(x); }

Meta hssm_bank(MetaSim& sim, const CircuitShape& s) {
  Meta scaled{};
  for (int t = 1; t <= s.T; ++t) {
    Meta x = sim.fresh();
    if (s.with_projection) {
      sim.begin(t, "project");
      x = matvec_meta(x);
    }
    sim.begin(t, "gate_write");
    const Meta g = gate_write_meta(x);
    sim.begin(t, "local_write");
    const Meta w = MetaSim::mul(g, g);
    sim.begin(t, "decay_scale");
    scaled = MetaSim::mul_plain(w);
  }
  // Every scaled write shares one schedule, so the tree sums equal metadata.
  sim.begin(0, "aggregate");
  const Meta h = scaled;
  sim.begin(0, "readout");
  return MetaSim::mul_plain(h);
}

Meta recurrent(MetaSim& sim, const CircuitShape& s, bool naive) {
  Meta h = sim.fresh();
  for (int t = 1; t <= s.T; ++t) {
    Meta x = sim.fresh();
    if (s.with_projection) {
      sim.begin(t, "project");
      x = matvec_meta(x);
      if (naive) {
        x = MetaSim::norm(x);
      }
    }
    sim.begin(t, "gate_write");
    const Meta g = gate_write_meta(x);
    Meta carry_gate{};
    if (naive) {
      sim.begin(t, "carry_gate");
      carry_gate = gate_write_meta(x);
    }
    sim.begin(t, "local_write");
    const Meta w = MetaSim::mul(g, g);
    sim.begin(t, "carry");
    const Meta carried = naive ? MetaSim::mul(carry_gate, h) : MetaSim::mul_plain(h);
    sim.begin(t, "state_update");
    h = MetaSim::add(carried, w);
  }
  return h;
}

Meta attention(MetaSim& sim, const CircuitShape& s) {
  const bool full = s.kind == CircuitKind::AttnFullSequence;
  const int T = s.T;
  Meta qkv = sim.fresh();
  if (s.with_projection) {
    Meta z{};
    for (int t = 1; t <= T; ++t) {
      sim.begin(t, "project");
      z = matvec_meta(sim.fresh());
    }
    for (int t = 1; t <= T; ++t) {
      sim.begin(t, "qkv_project");
      qkv = matvec_meta(MetaSim::norm(z));
    }
  }
  sim.begin(0, "align");
  const Meta q = MetaSim::norm(qkv);
  const Meta k = q;
  const Meta v = q;

  const int first = full ? 1 : T;
  Meta z{};
  for (int i = first; i <= T; ++i) {
    sim.begin(i, "score");
    z = MetaSim::mul_plain(MetaSim::mul(q, k));
  }
  Meta out{};
  for (int i = first; i <= T; ++i) {
    sim.begin(i, "kernel");
    const Meta z1 = MetaSim::norm(z);
    const Meta sq1 = MetaSim::norm(MetaSim::mul(z1, z1));
    const Meta kappa = MetaSim::add(z, MetaSim::mul_plain(sq1));
    const Meta weight = MetaSim::mul_plain(kappa);
    sim.begin(i, "denominator");
    const Meta r = weight;
    sim.begin(i, "normalizer");
    const Meta r1 = MetaSim::norm(r);
    const Meta rho = MetaSim::add(MetaSim::mul(r1, r1), r);
    sim.begin(i, "numerator");
    const Meta num = MetaSim::mul(MetaSim::norm(weight), v);
    sim.begin(i, "output");
    out = MetaSim::mul(num, rho);
  }
  if (full && T > 1) {
    sim.begin(0, "pool");
    out = MetaSim::mul_plain(out);
  }
  sim.begin(0, "readout");
  return MetaSim::mul_plain(out);
}

}  // namespace

LevelPrediction predict_level_trace(const CircuitShape& shape) {
  if (shape.T < 1 || shape.depth < 1) {
    throw InvalidParams("prediction needs T >= 1 and depth >= 1");
  }
  MetaSim sim(shape.depth);
  LevelPrediction out;
  try {
    Meta m{};
    switch (shape.kind) {
      case CircuitKind::HssmClosed:
      case CircuitKind::HssmMulti: m = hssm_bank(sim, shape); break;
      case CircuitKind::HssmStreaming: m = recurrent(sim, shape, false); break;
      case CircuitKind::Naive: m = recurrent(sim, shape, true); break;
      case CircuitKind::AttnFinalToken:
      case CircuitKind::AttnFullSequence: m = attention(sim, shape); break;
    }
    out.level = m.level;
    out.degree = m.degree;
  } catch (const Exhausted&) {
    out.level = 0;
    out.degree = 2;
    out.exhaustion = PredictedExhaustion{sim.step(), sim.stage()};
  }
  return out;
}

// ---------------------------------------------------------------------------
// Operation counts

OpLedger op_count_model(const CircuitShape& shape) {
  using u64 = std::uint64_t;
  if (shape.T < 1 || !std::has_single_bit(shape.width)) {
    throw InvalidParams("op_count_model needs T >= 1 and a power-of-two width");
  }
  const u64 T = static_cast<u64>(shape.T);
  const u64 n = shape.width;
  const u64 lg = static_cast<u64>(std::countr_zero(n));
  const u64 p = shape.with_projection ? 1 : 0;
  const u64 K = std::max<u64>(1, shape.decays);

  OpLedger c;
  switch (shape.kind) {
    case CircuitKind::HssmClosed:
    case CircuitKind::HssmMulti: {
      const u64 k = shape.kind == CircuitKind::HssmClosed ? 1 : K;
      c.mul_ct_ct = 2 * T;
      c.mul_ct_pt = T * (p * n + 4 + k) + k;
      c.add = T * (p * n + 4) + k * (T - 1) + (k - 1) + lg + 1;
      c.rotate = T * p * n + lg;
      c.rescale = T * (4 + p) + k;
      c.level_switch = 2 * T;
      break;
    }
    case CircuitKind::HssmStreaming:
      c.mul_ct_ct = 2 * T;
      c.mul_ct_pt = T * (p * n + 5);
      c.add = T * (p * n + 4) + T;
      c.rotate = T * p * n;
      c.rescale = T * (3 + p) + (T - 1);
      c.level_switch = 3 * T;
      break;
    case CircuitKind::Naive:
      c.mul_ct_ct = 4 * T;
      c.mul_ct_pt = T * (p * n + 6);
      c.add = T * (p * n + 6) + T;
      c.rotate = T * p * n;
      c.rescale = T * (5 + p) + (T - 1);
      c.level_switch = 4 * T + (T - 1);
      break;
    case CircuitKind::AttnFinalToken:
    case CircuitKind::AttnFullSequence: {
      const bool full = shape.kind == CircuitKind::AttnFullSequence;
      const u64 Q = full ? T : 1;
      const u64 F = (full && T > 1) ? 1 : 0;
      c.mul_ct_ct = Q * (3 * T + 2);
      c.mul_ct_pt = 3 * Q * T + F * Q + 1 + p * 4 * n * T;
      c.add = Q * (T * (lg + 4) + 1) + F * (T - 1) + lg + 1 + p * 4 * n * T;
      c.rotate = Q * lg * T + lg + p * 4 * n * T;
      c.rescale = Q * (5 * T + 3) + F * Q + 1 + p * (T + Q + 2 * T);
      c.level_switch = Q * (2 * T + 1);
      break;
    }
  }
  return c;
}

bool same_op_counts(const OpLedger& a, const OpLedger& b) {
  return a.mul_ct_ct == b.mul_ct_ct && a.mul_ct_pt == b.mul_ct_pt && a.add == b.add &&
         a.rescale == b.rescale && a.level_switch == b.level_switch && a.rotate == b.rotate;
}

std::uint64_t logical_state_units(CircuitKind kind, std::uint64_t T, std::uint64_t decays) {
  switch (kind) {
    case CircuitKind::HssmClosed:
    case CircuitKind::HssmStreaming:
    case CircuitKind::Naive: return 1;
    case CircuitKind::HssmMulti: return std::max<std::uint64_t>(1, decays);
    // Keys and values for every position plus the final query.
    case CircuitKind::AttnFinalToken: return 2 * T + 1;
    // Queries, keys and values for every position.
    case CircuitKind::AttnFullSequence: return 3 * T;
  }
  return 0;
}

std::uint64_t stress_required_units(CircuitKind kind, std::uint64_t T) {
  switch (kind) {
    case CircuitKind::AttnFullSequence: return T * T + kQuadraticOverhead;
    case CircuitKind::AttnFinalToken: return 3 * T + kQuadraticOverhead;
    default: return kHssmOverhead;
  }
}

StressResult stress_check(CircuitKind kind, std::uint64_t T, const StressBudget& budget) {
  if (budget.max_live_ciphertexts == 0) {
    throw InvalidParams("stress budget must be positive");
  }
  const std::uint64_t need = stress_required_units(kind, T);
  return {need <= budget.max_live_ciphertexts, need};
}

}  // namespace hssmlab
