#pragma once

// Static predictors for the sequence circuits. Nothing here touches slot
// values: level traces come from propagating (level, degree) pairs through
// the same lazy-rescale rules the simulator applies, and op counts are
// closed-form polynomials in T, width and the number of decays.

#include <cstdint>
#include <optional>
#include <string>

#include "hssmlab/ledger.hpp"

namespace hssmlab {

struct DepthParams {
  int d_g = 1;
  int d_w = 2;
  int d_h0 = 0;
};

/// d_h(t) for an encrypted carry gate, by direct iteration from d_h(0) = d_h0.
int carry_depth_naive(int t, const DepthParams& p);
/// Carry-path depth under a public decay: the write depth, never growing with t.
int carry_depth_hssm(const DepthParams& p);

struct FootprintReport {
  std::uint64_t state_units = 0;
  std::uint64_t feature_cache_units = 0;
  std::uint64_t kv_cache_units = 0;
  std::uint64_t score_units = 0;

  friend bool operator==(const FootprintReport&, const FootprintReport&) = default;
};

FootprintReport footprint(std::uint64_t T);

enum class CircuitKind {
  HssmClosed,
  HssmStreaming,
  HssmMulti,
  Naive,
  AttnFinalToken,
  AttnFullSequence,
};

/// CLI spelling, e.g. "hssm-closed" or "full-seq".
std::string kind_name(CircuitKind kind);
/// Accepts the CLI spellings plus the short aliases "hssm", "multi",
/// "final", "full" and "quad-attn". Throws InvalidParams otherwise.
CircuitKind parse_kind(const std::string& name);
bool is_attention(CircuitKind kind);

struct CircuitShape {
  CircuitKind kind = CircuitKind::HssmClosed;
  int T = 8;
  int depth = 8;
  bool with_projection = false;
  std::size_t width = 8;
  std::size_t decays = 1;
};

struct PredictedExhaustion {
  int step = 0;
  std::string stage;
};

struct LevelPrediction {
  int level = 0;
  int degree = 0;
  std::optional<PredictedExhaustion> exhaustion;

  bool ok() const { return !exhaustion.has_value(); }
};

LevelPrediction predict_level_trace(const CircuitShape& shape);

/// Predicted server-side counters for one example (encrypt, decrypt, clip and
/// live fields stay zero). Only meaningful for configurations that complete.
OpLedger op_count_model(const CircuitShape& shape);

/// True when the six operation counters agree; bookkeeping fields are ignored.
bool same_op_counts(const OpLedger& a, const OpLedger& b);

/// Logical ciphertext units of recurrent or cached state per example.
std::uint64_t logical_state_units(CircuitKind kind, std::uint64_t T, std::uint64_t decays = 1);

struct StressBudget {
  std::uint64_t max_live_ciphertexts = 1100;
};

/// Live non-score ciphertexts held by materialized quadratic attention.
inline constexpr std::uint64_t kQuadraticOverhead = 8;
/// Live ciphertexts a public-decay HSSM step needs regardless of T.
inline constexpr std::uint64_t kHssmOverhead = 4;

struct StressResult {
  bool ok = true;
  std::uint64_t required_units = 0;
};

std::uint64_t stress_required_units(CircuitKind kind, std::uint64_t T);
StressResult stress_check(CircuitKind kind, std::uint64_t T, const StressBudget& budget);

}  // namespace hssmlab
