#include "hssmlab/seq_circuits.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace hssmlab {

AffineMap AffineMap::identity(std::size_t n) {
  AffineMap m;
  m.width = n;
  m.matrix.assign(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    m.matrix[i * n + i] = 1.0;
  }
  m.bias.assign(n, 0.0);
  return m;
}

std::vector<double> AffineMap::apply(std::span<const double> x) const {
  std::vector<double> out(width, 0.0);
  for (std::size_t r = 0; r < width; ++r) {
    double acc = bias[r];
    for (std::size_t c = 0; c < width; ++c) {
      acc += at(r, c) * x[c];
    }
    out[r] = acc;
  }
  return out;
}

void AffineMap::validate(std::size_t n) const {
  if (width != n || matrix.size() != n * n || bias.size() != n) {
    throw ShapeMismatch("affine map is not " + std::to_string(n) + "x" + std::to_string(n));
  }
}

RowReadout RowReadout::uniform(std::size_t n, double weight, double bias) {
  return RowReadout{std::vector<double>(n, weight), bias};
}

double RowReadout::apply(std::span<const double> h) const {
  double acc = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    acc += weights[i] * h[i];
  }
  return acc + bias;
}

void HssmParams::validate(std::size_t width) const {
  if (decays.empty()) {
    throw InvalidParams("at least one decay is required");
  }
  for (std::size_t k = 0; k < decays.size(); ++k) {
    if (!(decays[k] > 0.0 && decays[k] <= 1.0)) {
      throw InvalidParams("decays must lie in (0, 1]");
    }
    if (k > 0 && !(decays[k] > decays[k - 1])) {
      throw InvalidParams("decays must be ascending and distinct");
    }
  }
  if (readout.weights.size() != width) {
    throw ShapeMismatch("readout row has wrong width");
  }
  if (!bank_combine.empty() && bank_combine.size() != decays.size()) {
    throw ShapeMismatch("bank_combine needs one weight per decay");
  }
  if (!bank_readout.empty()) {
    if (bank_readout.size() != decays.size()) {
      throw ShapeMismatch("bank_readout needs one row per decay");
    }
    for (const auto& row : bank_readout) {
      if (row.size() != width) {
        throw ShapeMismatch("bank_readout row has wrong width");
      }
    }
  }
  if (input_proj) {
    input_proj->validate(width);
  }
}

std::vector<double> HssmParams::track_readout(std::size_t k) const {
  if (!bank_readout.empty()) {
    return bank_readout[k];
  }
  const double combine = bank_combine.empty() ? 1.0 / static_cast<double>(decays.size())
                                              : bank_combine[k];
  std::vector<double> row = readout.weights;
  for (double& w : row) {
    w *= combine;
  }
  return row;
}

namespace {

void require_sequence(std::span<const CtVector> xs) {
  if (xs.empty()) {
    throw InvalidParams("sequence length T must be >= 1");
  }
}

// Runs `body`, attributing any level exhaustion to the recorder's current
// stage and attaching the partial trace.
template <class Body>
CircuitResult traced(Context& ctx, Body&& body) {
  TraceRecorder rec(ctx);
  try {
    CtVector out = body(rec);
    return {std::move(out), rec.take()};
  } catch (LevelExhausted& e) {
    const int step = rec.step();
    std::string stage = rec.stage();
    e.annotate(step, std::move(stage), rec.take());
    throw;
  }
}

// c0 + c1 x + c2 s with x and s already rescaled to degree 1.
CtVector poly_from_powers(Context& ctx, const CtVector& x1, const CtVector& s1, const Poly2& p) {
  const CtVector lin = ctx.mul_cp(x1, p.c1);
  const CtVector quad = ctx.mul_cp(s1, p.c2);
  const CtVector sum = ctx.add_cc(lin, quad);
  ctx.release(lin);
  ctx.release(quad);
  CtVector out = ctx.add_cp(sum, p.c0);
  ctx.release(sum);
  return out;
}

struct Powers {
  CtVector x1;
  CtVector s1;
};

Powers square_powers(Context& ctx, const CtVector& x) {
  CtVector x1 = ctx.normalize_for_mult(x);
  const CtVector s = ctx.mul_cc(x1, x1);
  CtVector s1 = ctx.normalize_for_mult(s);
  ctx.release(s);
  return {std::move(x1), std::move(s1)};
}

CtVector balanced_sum(Context& ctx, std::vector<CtVector> terms) {
  while (terms.size() > 1) {
    std::vector<CtVector> next;
    next.reserve((terms.size() + 1) / 2);
    for (std::size_t i = 0; i < terms.size(); i += 2) {
      if (i + 1 < terms.size()) {
        next.push_back(ctx.add_cc(terms[i], terms[i + 1]));
        ctx.release(terms[i]);
        ctx.release(terms[i + 1]);
      } else {
        next.push_back(terms[i]);
      }
    }
    terms = std::move(next);
  }
  return terms.front();
}

// Left-to-right sum that leaves the terms live.
CtVector running_sum(Context& ctx, std::span<const CtVector> terms) {
  CtVector acc = terms[0];
  bool owned = false;
  for (std::size_t t = 1; t < terms.size(); ++t) {
    CtVector next = ctx.add_cc(acc, terms[t]);
    if (owned) {
      ctx.release(acc);
    }
    acc = std::move(next);
    owned = true;
  }
  return acc;
}

// Projection (when requested) for one position; the returned flag says
// whether the caller owns the result.
std::pair<CtVector, bool> maybe_project(Context& ctx, TraceRecorder& rec, int step,
                                        const CtVector& x, const std::optional<AffineMap>& map,
                                        bool with_projection) {
  if (!with_projection) {
    return {x, false};
  }
  if (!map) {
    throw InvalidParams("projection requested but no input projection is set");
  }
  rec.begin(step, "project");
  CtVector z = input_projection(ctx, x, *map);
  rec.record(z);
  return {std::move(z), true};
}

CtVector row_readout_bank(Context& ctx, std::span<const CtVector> tracks,
                          const std::vector<std::vector<double>>& rows, double bias) {
  std::vector<CtVector> terms;
  terms.reserve(tracks.size());
  for (std::size_t k = 0; k < tracks.size(); ++k) {
    terms.push_back(ctx.mul_cp(tracks[k], PtVector(rows[k])));
  }
  CtVector combined = terms[0];
  for (std::size_t k = 1; k < terms.size(); ++k) {
    CtVector next = ctx.add_cc(combined, terms[k]);
    ctx.release(combined);
    ctx.release(terms[k]);
    combined = std::move(next);
  }
  const CtVector total = ctx.slot_sum(combined);
  ctx.release(combined);
  CtVector out = ctx.add_cp(total, bias);
  ctx.release(total);
  return out;
}

// Shared body of the closed-form and multi-decay circuits: one gate/write
// evaluation per step, K plaintext-scaled copies, a balanced tree per track
// and a folded row readout.
CtVector decay_bank(Context& ctx, TraceRecorder& rec, std::span<const CtVector> xs,
                    const HssmParams& params, bool with_projection, bool with_readout = true) {
  const std::size_t T = xs.size();
  const std::size_t K = params.decays.size();
  std::vector<std::vector<CtVector>> scaled(K);

  for (std::size_t t = 0; t < T; ++t) {
    const int step = static_cast<int>(t) + 1;
    auto [x, owned] = maybe_project(ctx, rec, step, xs[t], params.input_proj, with_projection);

    rec.begin(step, "gate_write");
    GateWrite gw = eval_gate_write(ctx, x, params.poly);
    rec.record(gw.gate);
    if (owned) {
      ctx.release(x);
    }

    rec.begin(step, "local_write");
    const CtVector w = hssm_local_write(ctx, gw.gate, gw.write);
    ctx.release(gw.gate);
    ctx.release(gw.write);
    rec.record(w);

    rec.begin(step, "decay_scale");
    const CtVector w1 = ctx.normalize_for_mult(w);
    ctx.release(w);
    const double exponent = static_cast<double>(T - 1 - t);
    for (std::size_t k = 0; k < K; ++k) {
      scaled[k].push_back(ctx.mul_cp(w1, std::pow(params.decays[k], exponent)));
    }
    ctx.release(w1);
    rec.record(scaled[0].back());
  }

  std::vector<CtVector> tracks;
  tracks.reserve(K);
  for (std::size_t k = 0; k < K; ++k) {
    rec.begin(0, "aggregate");
    tracks.push_back(balanced_sum(ctx, std::move(scaled[k])));
    rec.record(tracks.back());
  }

  if (!with_readout) {
    return tracks.front();
  }

  rec.begin(0, "readout");
  std::vector<std::vector<double>> rows;
  rows.reserve(K);
  for (std::size_t k = 0; k < K; ++k) {
    rows.push_back(params.track_readout(k));
  }
  CtVector score = row_readout_bank(ctx, tracks, rows, params.readout.bias);
  for (const auto& h : tracks) {
    ctx.release(h);
  }
  rec.record(score);
  return score;
}

CtVector kernel_weight(Context& ctx, const CtVector& z) {
  const CtVector z1 = ctx.normalize_for_mult(z);
  const CtVector sq = ctx.mul_cc(z1, z1);
  ctx.release(z1);
  const CtVector sq1 = ctx.normalize_for_mult(sq);
  ctx.release(sq);
  const CtVector half_sq = ctx.mul_cp(sq1, 0.5);
  ctx.release(sq1);
  const CtVector lin = ctx.add_cc(z, half_sq);
  ctx.release(half_sq);
  CtVector out = ctx.add_cp(lin, 1.0);
  ctx.release(lin);
  return out;
}

CtVector attention_core(Context& ctx, TraceRecorder& rec, std::span<const CtVector> qs,
                        std::span<const CtVector> ks, std::span<const CtVector> vs,
                        const AttnParams& params, AttentionMode mode) {
  require_sequence(ks);
  const std::size_t T = ks.size();
  if (qs.size() != T || vs.size() != T) {
    throw ShapeMismatch("q, k and v sequences differ in length");
  }
  if (!(params.denom_center > 0.0)) {
    throw InvalidParams("denominator center must be positive");
  }
  const std::size_t first_query = mode == AttentionMode::FinalToken ? T - 1 : 0;
  const double score_scale = params.effective_score_scale(ctx.slot_count());
  const double inv_center = 1.0 / params.denom_center;

  rec.begin(0, "align");
  std::vector<CtVector> qn, kn, vn;
  for (std::size_t i = first_query; i < T; ++i) {
    qn.push_back(ctx.normalize_for_mult(qs[i]));
  }
  for (std::size_t t = 0; t < T; ++t) {
    kn.push_back(ctx.normalize_for_mult(ks[t]));
    vn.push_back(ctx.normalize_for_mult(vs[t]));
  }
  rec.record(kn.back());

  // All score ciphertexts are materialized before any denominator.
  std::vector<std::vector<CtVector>> scores(qn.size());
  for (std::size_t qi = 0; qi < qn.size(); ++qi) {
    rec.begin(static_cast<int>(first_query + qi) + 1, "score");
    for (std::size_t t = 0; t < T; ++t) {
      const CtVector prod = ctx.mul_cc(qn[qi], kn[t]);
      const CtVector scaled = ctx.mul_cp(prod, score_scale);
      ctx.release(prod);
      scores[qi].push_back(ctx.slot_sum(scaled));
      ctx.release(scaled);
    }
    rec.record(scores[qi].back());
  }

  std::vector<CtVector> outputs;
  for (std::size_t qi = 0; qi < qn.size(); ++qi) {
    const int step = static_cast<int>(first_query + qi) + 1;

    rec.begin(step, "kernel");
    std::vector<CtVector> weights;
    for (std::size_t t = 0; t < T; ++t) {
      const CtVector kappa = kernel_weight(ctx, scores[qi][t]);
      weights.push_back(ctx.mul_cp(kappa, inv_center));
      ctx.release(kappa);
    }
    rec.record(weights.back());

    rec.begin(step, "denominator");
    const CtVector denom = running_sum(ctx, weights);
    for (const auto& z : scores[qi]) {
      ctx.release(z);
    }
    scores[qi].clear();
    const CtVector r = ctx.add_cp(denom, -1.0);
    if (T > 1) {
      ctx.release(denom);
    }
    rec.record(r);

    rec.begin(step, "normalizer");
    const CtVector r1 = ctx.normalize_for_mult(r);
    const CtVector r2 = ctx.mul_cc(r1, r1);
    ctx.release(r1);
    const CtVector diff = ctx.sub_cc(r2, r);
    ctx.release(r2);
    ctx.release(r);
    const CtVector rho = ctx.add_cp(diff, 1.0);
    ctx.release(diff);
    rec.record(rho);

    rec.begin(step, "numerator");
    std::vector<CtVector> terms;
    for (std::size_t t = 0; t < T; ++t) {
      const CtVector w1 = ctx.normalize_for_mult(weights[t]);
      ctx.release(weights[t]);
      terms.push_back(ctx.mul_cc(w1, vn[t]));
      ctx.release(w1);
    }
    const CtVector num = running_sum(ctx, terms);
    for (std::size_t t = 0; t < T; ++t) {
      if (T > 1) {
        ctx.release(terms[t]);
      }
    }
    rec.record(num);

    rec.begin(step, "output");
    outputs.push_back(ctx.mul_cc(num, rho));
    ctx.release(num);
    ctx.release(rho);
    rec.record(outputs.back());
  }

  for (const auto& c : qn) ctx.release(c);
  for (const auto& c : kn) ctx.release(c);
  for (const auto& c : vn) ctx.release(c);

  if (outputs.size() == 1) {
    return outputs.front();
  }
  // Mean over positions, scaling before the sum so partial sums stay within
  // the range of a single output. A single position is its own mean.
  rec.begin(0, "pool");
  const double inv_count = 1.0 / static_cast<double>(outputs.size());
  std::vector<CtVector> scaled;
  for (const auto& o : outputs) {
    scaled.push_back(ctx.mul_cp(o, inv_count));
    ctx.release(o);
  }
  CtVector pooled = running_sum(ctx, scaled);
  for (const auto& c : scaled) {
    ctx.release(c);
  }
  rec.record(pooled);
  return pooled;
}

QkvSet qkv_project_impl(Context& ctx, TraceRecorder* rec, std::span<const CtVector> xs,
                        const AttnParams& params) {
  if (!params.wq || !params.wk || !params.wv) {
    throw InvalidParams("Q/K/V projection matrices are not set");
  }
  QkvSet out;
  for (std::size_t t = 0; t < xs.size(); ++t) {
    if (rec) {
      rec->begin(static_cast<int>(t) + 1, "qkv_project");
    }
    const CtVector x1 = ctx.normalize_for_mult(xs[t]);
    out.qs.push_back(input_projection(ctx, x1, *params.wq));
    out.ks.push_back(input_projection(ctx, x1, *params.wk));
    out.vs.push_back(input_projection(ctx, x1, *params.wv));
    ctx.release(x1);
    if (rec) {
      rec->record(out.vs.back());
    }
  }
  return out;
}

}  // namespace

GateWrite eval_gate_write(Context& ctx, const CtVector& x, const GateWritePoly& poly) {
  const Powers pw = square_powers(ctx, x);
  GateWrite out{poly_from_powers(ctx, pw.x1, pw.s1, poly.gate),
                poly_from_powers(ctx, pw.x1, pw.s1, poly.write)};
  ctx.release(pw.x1);
  ctx.release(pw.s1);
  return out;
}

CtVector eval_poly2(Context& ctx, const CtVector& x, const Poly2& poly) {
  const Powers pw = square_powers(ctx, x);
  CtVector out = poly_from_powers(ctx, pw.x1, pw.s1, poly);
  ctx.release(pw.x1);
  ctx.release(pw.s1);
  return out;
}

CtVector input_projection(Context& ctx, const CtVector& x, const AffineMap& map) {
  const std::size_t n = ctx.slot_count();
  map.validate(n);
  const CtVector x1 = ctx.normalize_for_mult(x);
  CtVector acc;
  for (std::size_t i = 0; i < n; ++i) {
    // rot(x, i)[j] = x[(j + i) mod n] pairs with A[j][(j + i) mod n].
    std::vector<double> diag(n);
    for (std::size_t j = 0; j < n; ++j) {
      diag[j] = map.at(j, (j + i) % n);
    }
    const CtVector rot = ctx.rotate_slots(x1, i);
    CtVector term = ctx.mul_cp(rot, PtVector(std::move(diag)));
    ctx.release(rot);
    if (i == 0) {
      acc = std::move(term);
    } else {
      CtVector next = ctx.add_cc(acc, term);
      ctx.release(acc);
      ctx.release(term);
      acc = std::move(next);
    }
  }
  ctx.release(x1);
  CtVector out = ctx.add_cp(acc, PtVector(map.bias));
  ctx.release(acc);
  return out;
}

CtVector hssm_local_write(Context& ctx, const CtVector& g, const CtVector& u) {
  return ctx.mul_cc(g, u);
}

CtVector readout(Context& ctx, const CtVector& h, const RowReadout& row) {
  if (row.weights.size() != ctx.slot_count()) {
    throw ShapeMismatch("readout row has wrong width");
  }
  const CtVector weighted = ctx.mul_cp(h, PtVector(row.weights));
  const CtVector total = ctx.slot_sum(weighted);
  ctx.release(weighted);
  CtVector out = ctx.add_cp(total, row.bias);
  ctx.release(total);
  return out;
}

CtVector readout(Context& ctx, const CtVector& h, const AffineMap& map) {
  return input_projection(ctx, h, map);
}

CircuitResult hssm_streaming(Context& ctx, std::span<const CtVector> xs, const HssmParams& params,
                             bool with_projection) {
  require_sequence(xs);
  params.validate(ctx.slot_count());
  if (params.decays.size() != 1) {
    throw InvalidParams("streaming HSSM carries a single decay");
  }
  const double a = params.decays.front();
  return traced(ctx, [&](TraceRecorder& rec) {
    CtVector h = ctx.zeros();
    for (std::size_t t = 0; t < xs.size(); ++t) {
      const int step = static_cast<int>(t) + 1;
      auto [x, owned] = maybe_project(ctx, rec, step, xs[t], params.input_proj, with_projection);

      rec.begin(step, "gate_write");
      GateWrite gw = eval_gate_write(ctx, x, params.poly);
      rec.record(gw.gate);
      if (owned) {
        ctx.release(x);
      }

      rec.begin(step, "local_write");
      const CtVector w = hssm_local_write(ctx, gw.gate, gw.write);
      ctx.release(gw.gate);
      ctx.release(gw.write);
      rec.record(w);

      rec.begin(step, "carry");
      const CtVector carried = ctx.mul_cp(h, a);
      ctx.release(h);
      rec.record(carried);

      rec.begin(step, "state_update");
      h = ctx.add_cc(carried, w);
      ctx.release(carried);
      ctx.release(w);
      rec.record(h);
    }
    return h;
  });
}

CircuitResult hssm_closed_form(Context& ctx, std::span<const CtVector> xs,
                               const HssmParams& params, bool with_projection) {
  require_sequence(xs);
  params.validate(ctx.slot_count());
  if (params.decays.size() != 1) {
    throw InvalidParams("closed-form HSSM carries a single decay; use hssm_multi_decay");
  }
  return traced(ctx, [&](TraceRecorder& rec) {
    return decay_bank(ctx, rec, xs, params, with_projection);
  });
}

CircuitResult hssm_closed_form_state(Context& ctx, std::span<const CtVector> xs,
                                     const HssmParams& params, bool with_projection) {
  require_sequence(xs);
  params.validate(ctx.slot_count());
  if (params.decays.size() != 1) {
    throw InvalidParams("closed-form state carries a single decay");
  }
  return traced(ctx, [&](TraceRecorder& rec) {
    return decay_bank(ctx, rec, xs, params, with_projection, false);
  });
}

CircuitResult hssm_multi_decay(Context& ctx, std::span<const CtVector> xs,
                               const HssmParams& params, bool with_projection) {
  require_sequence(xs);
  params.validate(ctx.slot_count());
  return traced(ctx, [&](TraceRecorder& rec) {
    return decay_bank(ctx, rec, xs, params, with_projection);
  });
}

CircuitResult naive_recurrence(Context& ctx, std::span<const CtVector> xs,
                               const NaiveParams& params, bool with_projection) {
  require_sequence(xs);
  if (params.input_proj) {
    params.input_proj->validate(ctx.slot_count());
  }
  return traced(ctx, [&](TraceRecorder& rec) {
    CtVector h = ctx.zeros();
    for (std::size_t t = 0; t < xs.size(); ++t) {
      const int step = static_cast<int>(t) + 1;
      auto [x, owned] = maybe_project(ctx, rec, step, xs[t], params.input_proj, with_projection);
      if (owned) {
        // Both polynomial paths consume the projection; rescale it once.
        const CtVector x1 = ctx.normalize_for_mult(x);
        ctx.release(x);
        x = x1;
      }

      rec.begin(step, "gate_write");
      GateWrite gw = eval_gate_write(ctx, x, params.input_write);
      rec.record(gw.gate);

      rec.begin(step, "carry_gate");
      const CtVector carry_gate = eval_poly2(ctx, x, params.carry_gate);
      rec.record(carry_gate);
      if (owned) {
        ctx.release(x);
      }

      rec.begin(step, "local_write");
      const CtVector w = ctx.mul_cc(gw.gate, gw.write);
      ctx.release(gw.gate);
      ctx.release(gw.write);
      rec.record(w);

      rec.begin(step, "carry");
      const CtVector carried = ctx.mul_cc(carry_gate, h);
      ctx.release(carry_gate);
      ctx.release(h);
      rec.record(carried);

      rec.begin(step, "state_update");
      h = ctx.add_cc(carried, w);
      ctx.release(carried);
      ctx.release(w);
      rec.record(h);
    }
    return h;
  });
}

QkvSet qkv_project(Context& ctx, std::span<const CtVector> xs, const AttnParams& params) {
  return qkv_project_impl(ctx, nullptr, xs, params);
}

CircuitResult poly_attention(Context& ctx, std::span<const CtVector> qs,
                             std::span<const CtVector> ks, std::span<const CtVector> vs,
                             const AttnParams& params, AttentionMode mode) {
  return traced(ctx, [&](TraceRecorder& rec) {
    return attention_core(ctx, rec, qs, ks, vs, params, mode);
  });
}

CircuitResult attention_block(Context& ctx, std::span<const CtVector> xs,
                              const AttnParams& params, AttentionMode mode,
                              bool with_projection) {
  require_sequence(xs);
  if (params.readout.weights.size() != ctx.slot_count()) {
    throw ShapeMismatch("readout row has wrong width");
  }
  return traced(ctx, [&](TraceRecorder& rec) {
    CtVector y;
    if (with_projection) {
      std::vector<CtVector> zs;
      for (std::size_t t = 0; t < xs.size(); ++t) {
        zs.push_back(maybe_project(ctx, rec, static_cast<int>(t) + 1, xs[t], params.input_proj,
                                   true)
                         .first);
      }
      QkvSet qkv = qkv_project_impl(ctx, &rec, zs, params);
      for (const auto& z : zs) {
        ctx.release(z);
      }
      y = attention_core(ctx, rec, qkv.qs, qkv.ks, qkv.vs, params, mode);
      for (auto* seq : {&qkv.qs, &qkv.ks, &qkv.vs}) {
        for (const auto& c : *seq) {
          ctx.release(c);
        }
      }
    } else {
      y = attention_core(ctx, rec, xs, xs, xs, params, mode);
    }
    rec.begin(0, "readout");
    CtVector score = readout(ctx, y, params.readout);
    ctx.release(y);
    rec.record(score);
    return score;
  });
}

}  // namespace hssmlab
