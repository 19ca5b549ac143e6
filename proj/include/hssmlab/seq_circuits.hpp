#pragma once

// Encrypted sequence circuits over the mock CKKS context.
//
// Three families share the same gate/write building blocks:
//   * public-decay HSSM   h_t = a h_{t-1} + g(x_t) u(x_t), carried by a
//     ciphertext-plaintext product (streaming, closed-form, multi-decay);
//   * naive selective recurrence, where an encrypted carry gate multiplies the
//     encrypted state every step;
//   * polynomial-normalized attention with kernel 1 + z + z^2/2 and
//     reciprocal 1 - r + r^2 (final-token or full-sequence readout).
//
// Every circuit returns its output ciphertext and a StepTrace. On level
// exhaustion the thrown LevelExhausted carries the failing stage, step and the
// partial trace. Intermediates are released as soon as they are consumed;
// inputs stay owned by the caller.

#include <optional>
#include <span>
#include <vector>

#include "hssmlab/mock_ckks.hpp"
#include "hssmlab/trace.hpp"

namespace hssmlab {

/// c0 + c1 x + c2 x^2. The square is always evaluated, even when c2 = 0.
struct Poly2 {
  double c0 = 0.0;
  double c1 = 0.0;
  double c2 = 0.0;

  double operator()(double x) const { return c0 + c1 * x + c2 * x * x; }
};

struct GateWritePoly {
  Poly2 gate{0.5, 0.25, 0.125};
  Poly2 write{0.0, 1.0, 0.25};
};

/// Public affine map x -> A x + b over `width` slots. `matrix` is row-major.
struct AffineMap {
  std::size_t width = 0;
  std::vector<double> matrix;
  std::vector<double> bias;

  static AffineMap identity(std::size_t n);
  double at(std::size_t row, std::size_t col) const { return matrix[row * width + col]; }
  std::vector<double> apply(std::span<const double> x) const;
  void validate(std::size_t n) const;
};

/// Public readout reducing a slot vector to one score: w . h + b.
struct RowReadout {
  std::vector<double> weights;
  double bias = 0.0;

  static RowReadout uniform(std::size_t n, double weight, double bias = 0.0);
  double apply(std::span<const double> h) const;
};

struct HssmParams {
  /// Public decays a_k in (0, 1], ascending and distinct.
  std::vector<double> decays{0.5};
  GateWritePoly poly;
  std::optional<AffineMap> input_proj;
  RowReadout readout;
  /// One weight per decay track; empty means 1/K.
  std::vector<double> bank_combine;
  /// Optional per-track readout rows, overriding bank_combine[k] * readout.weights.
  std::vector<std::vector<double>> bank_readout;

  void validate(std::size_t width) const;
  /// Plaintext readout row applied to track k.
  std::vector<double> track_readout(std::size_t k) const;
};

struct NaiveParams {
  /// Encrypted carry gate g_A, multiplied into the encrypted state.
  Poly2 carry_gate{0.5, 0.25, 0.125};
  /// g_B and u share one square, exactly like the HSSM gate/write.
  GateWritePoly input_write;
  std::optional<AffineMap> input_proj;
};

enum class AttentionMode { FinalToken, FullSequence };

struct AttnParams {
  std::optional<AffineMap> input_proj;
  std::optional<AffineMap> wq;
  std::optional<AffineMap> wk;
  std::optional<AffineMap> wv;
  /// Reciprocal expansion point for the kernel-weight denominator.
  double denom_center = 1.0;
  /// Plaintext factor applied to q*k before the slot reduction; 1/width when unset.
  std::optional<double> score_scale;
  RowReadout readout;

  double effective_score_scale(std::size_t width) const {
    return score_scale.value_or(1.0 / static_cast<double>(width));
  }
};

struct CircuitResult {
  CtVector output;
  StepTrace trace;
};

struct GateWrite {
  CtVector gate;
  CtVector write;
};

struct QkvSet {
  std::vector<CtVector> qs;
  std::vector<CtVector> ks;
  std::vector<CtVector> vs;
};

/// Shared square, then both degree-2 polynomials: exactly one ct-ct product.
GateWrite eval_gate_write(Context& ctx, const CtVector& x, const GateWritePoly& poly);
/// A single degree-2 polynomial with its own square.
CtVector eval_poly2(Context& ctx, const CtVector& x, const Poly2& poly);
/// Diagonal-method matrix-vector product plus bias, one multiplication stage.
CtVector input_projection(Context& ctx, const CtVector& x, const AffineMap& map);
CtVector hssm_local_write(Context& ctx, const CtVector& g, const CtVector& u);
/// Row readout: mul_cp, slot_sum, bias. The score is replicated in every slot.
CtVector readout(Context& ctx, const CtVector& h, const RowReadout& row);
/// Matrix readout C h + b via the diagonal method.
CtVector readout(Context& ctx, const CtVector& h, const AffineMap& map);

CircuitResult hssm_streaming(Context& ctx, std::span<const CtVector> xs, const HssmParams& params,
                             bool with_projection = false);
CircuitResult hssm_closed_form(Context& ctx, std::span<const CtVector> xs,
                               const HssmParams& params, bool with_projection);
/// Closed-form h_T itself, stopping before the readout.
CircuitResult hssm_closed_form_state(Context& ctx, std::span<const CtVector> xs,
                                     const HssmParams& params, bool with_projection = false);
CircuitResult hssm_multi_decay(Context& ctx, std::span<const CtVector> xs,
                               const HssmParams& params, bool with_projection = false);
CircuitResult naive_recurrence(Context& ctx, std::span<const CtVector> xs,
                               const NaiveParams& params, bool with_projection = false);

/// Three public projections per position (3T matrix-vector products).
QkvSet qkv_project(Context& ctx, std::span<const CtVector> xs, const AttnParams& params);
/// Attention output vector (no readout).
CircuitResult poly_attention(Context& ctx, std::span<const CtVector> qs,
                             std::span<const CtVector> ks, std::span<const CtVector> vs,
                             const AttnParams& params, AttentionMode mode);
/// Optional input + Q/K/V projections, attention, then the row readout.
/// Without projection the inputs serve directly as cached q = k = v.
CircuitResult attention_block(Context& ctx, std::span<const CtVector> xs,
                              const AttnParams& params, AttentionMode mode,
                              bool with_projection);

}  // namespace hssmlab
