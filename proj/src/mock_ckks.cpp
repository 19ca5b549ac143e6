#include "hssmlab/mock_ckks.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <string>

namespace hssmlab {

using detail::wide_int;

namespace {

constexpr std::int64_t kMaxRaw = std::int64_t{1} << 62;

// x / 2^shift rounded to nearest, ties to even.
wide_int round_shift(wide_int x, int shift) {
  const wide_int q = x >> shift;  // floor for negative values too
  const wide_int rem = x - (q << shift);
  const wide_int half = wide_int{1} << (shift - 1);
  if (rem > half || (rem == half && (q & 1) != 0)) {
    return q + 1;
  }
  return q;
}

}  // namespace

OpLedger& OpLedger::operator+=(const OpLedger& o) {
  mul_ct_ct += o.mul_ct_ct;
  mul_ct_pt += o.mul_ct_pt;
  add += o.add;
  rescale += o.rescale;
  level_switch += o.level_switch;
  rotate += o.rotate;
  encrypt_count += o.encrypt_count;
  decrypt_count += o.decrypt_count;
  clip_events += o.clip_events;
  live_ciphertexts += o.live_ciphertexts;
  peak_live_ciphertexts += o.peak_live_ciphertexts;
  return *this;
}

OpLedger ledger_delta(const OpLedger& after, const OpLedger& before) {
  OpLedger d;
  d.mul_ct_ct = after.mul_ct_ct - before.mul_ct_ct;
  d.mul_ct_pt = after.mul_ct_pt - before.mul_ct_pt;
  d.add = after.add - before.add;
  d.rescale = after.rescale - before.rescale;
  d.level_switch = after.level_switch - before.level_switch;
  d.rotate = after.rotate - before.rotate;
  d.encrypt_count = after.encrypt_count - before.encrypt_count;
  d.decrypt_count = after.decrypt_count - before.decrypt_count;
  d.clip_events = after.clip_events - before.clip_events;
  d.live_ciphertexts = after.live_ciphertexts;
  d.peak_live_ciphertexts = after.peak_live_ciphertexts;
  return d;
}

void SimParams::validate() const {
  if (depth_budget < 1) {
    throw InvalidParams("depth_budget must be >= 1");
  }
  if (scale_bits < 20 || scale_bits > 60) {
    throw InvalidParams("scale_bits must lie in [20, 60]");
  }
  if (slot_count == 0 || !std::has_single_bit(slot_count)) {
    throw InvalidParams("slot_count must be a power of two");
  }
  if (!(clip_bound > 0.0) || !std::isfinite(clip_bound)) {
    throw InvalidParams("clip_bound must be positive");
  }
  // Products are formed in 128-bit arithmetic from 63-bit operands.
  if (std::ldexp(clip_bound, scale_bits) >= static_cast<double>(kMaxRaw)) {
    throw InvalidParams("clip_bound * 2^scale_bits exceeds the 62-bit slot range");
  }
}

SimParams SimParams::reference_profile() { return SimParams{}; }

SimParams SimParams::pipeline_profile() {
  SimParams p;
  p.slot_count = 128;
  p.clip_bound = 3.0;
  return p;
}

std::span<const std::int64_t> CtVector::raw() const {
  if (!raw_) {
    return {};
  }
  return {raw_->data(), raw_->size()};
}

double CtVector::slot(std::size_t i) const {
  return std::ldexp(static_cast<double>(raw_->at(i)), -scale_bits_);
}

Context::Context(SimParams params) : params_(params) {
  params_.validate();
  clip_raw_ = static_cast<std::int64_t>(
      std::floor(std::ldexp(params_.clip_bound, params_.scale_bits)));
}

Context new_context(const SimParams& params) { return Context(params); }

void Context::check_shape(std::size_t n) const {
  if (n != params_.slot_count) {
    throw ShapeMismatch("expected " + std::to_string(params_.slot_count) +
                        " slots, got " + std::to_string(n));
  }
}

void Context::check_shape(const CtVector& ct) const {
  if (!ct.valid()) {
    throw ShapeMismatch("invalid ciphertext");
  }
  check_shape(ct.size());
  if (ct.level() < 0 || ct.level() > params_.depth_budget ||
      (ct.degree() != 1 && ct.degree() != 2)) {
    throw ShapeMismatch("ciphertext metadata out of range");
  }
}

CtVector Context::make(Slots slots, Meta meta) {
  CtVector ct;
  ct.raw_ = std::make_shared<const Slots>(std::move(slots));
  ct.level_ = meta.level;
  ct.degree_ = meta.degree;
  ct.scale_bits_ = params_.scale_bits;
  ct.id_ = next_id_++;
  live_.insert(ct.id_);
  ledger_.live_ciphertexts = live_.size();
  ledger_.peak_live_ciphertexts =
      std::max(ledger_.peak_live_ciphertexts, ledger_.live_ciphertexts);
  return ct;
}

std::int64_t Context::clamp_raw(wide_int v) {
  if (v > clip_raw_) {
    ++ledger_.clip_events;
    return clip_raw_;
  }
  if (v < -clip_raw_) {
    ++ledger_.clip_events;
    return -clip_raw_;
  }
  return static_cast<std::int64_t>(v);
}

std::int64_t Context::quantize_plain(double value) const {
  const double scaled = std::ldexp(value, params_.scale_bits);
  if (!std::isfinite(scaled) || std::fabs(scaled) >= static_cast<double>(kMaxRaw)) {
    throw RangeViolation("plaintext operand out of fixed-point range");
  }
  return static_cast<std::int64_t>(std::nearbyint(scaled));
}

Context::Meta Context::normalized(Meta m) {
  if (m.degree == 1) {
    return m;
  }
  if (m.level == 0) {
    throw LevelExhausted("rescale required at level 0");
  }
  ++ledger_.rescale;
  return {m.level - 1, 1};
}

CtVector Context::encrypt(std::span<const double> values) {
  check_shape(values.size());
  Slots slots(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double v = values[i];
    if (!(std::fabs(v) <= params_.clip_bound)) {
      throw RangeViolation("slot " + std::to_string(i) + " value " + std::to_string(v) +
                           " exceeds clip bound");
    }
    // The grid point nearest to |v| <= clip may sit half an ulp above the
    // bound; pull it back without counting a clip event.
    const auto q = static_cast<std::int64_t>(std::nearbyint(std::ldexp(v, params_.scale_bits)));
    slots[i] = std::clamp(q, -clip_raw_, clip_raw_);
  }
  ++ledger_.encrypt_count;
  return make(std::move(slots), {params_.depth_budget, 1});
}

Decrypted Context::decrypt(const CtVector& ct) {
  check_shape(ct);
  Decrypted out;
  out.values.reserve(ct.size());
  for (std::size_t i = 0; i < ct.size(); ++i) {
    out.values.push_back(ct.slot(i));
  }
  out.level = ct.level();
  out.degree = ct.degree();
  ++ledger_.decrypt_count;
  return out;
}

CtVector Context::zeros() {
  return make(Slots(params_.slot_count, 0), {params_.depth_budget, 1});
}

CtVector Context::normalize_for_mult(const CtVector& ct) {
  check_shape(ct);
  const Meta m = normalized({ct.level(), ct.degree()});
  return make(*ct.raw_, m);
}

CtVector Context::mul_cc(const CtVector& a, const CtVector& b) {
  check_shape(a);
  check_shape(b);
  // Validate both operands before touching the ledger.
  if ((a.degree() == 2 && a.level() == 0) || (b.degree() == 2 && b.level() == 0)) {
    throw LevelExhausted("rescale required at level 0");
  }
  const Meta ma = normalized({a.level(), a.degree()});
  const Meta mb = normalized({b.level(), b.degree()});
  const int common = std::min(ma.level, mb.level);
  ledger_.level_switch += (ma.level != common) + (mb.level != common);

  const int s = params_.scale_bits;
  Slots out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const wide_int prod = wide_int{(*a.raw_)[i]} * wide_int{(*b.raw_)[i]};
    out[i] = clamp_raw(round_shift(prod, s));
  }
  ++ledger_.mul_ct_ct;
  return make(std::move(out), {common, 2});
}

CtVector Context::mul_cp(const CtVector& ct, const PtVector& pt) {
  check_shape(ct);
  check_shape(pt.size());
  Slots plain(pt.size());
  for (std::size_t i = 0; i < plain.size(); ++i) {
    plain[i] = quantize_plain(pt.slots[i]);
  }
  const Meta m = normalized({ct.level(), ct.degree()});
  const int s = params_.scale_bits;
  Slots out(ct.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = clamp_raw(round_shift(wide_int{(*ct.raw_)[i]} * wide_int{plain[i]}, s));
  }
  ++ledger_.mul_ct_pt;
  return make(std::move(out), {m.level, 2});
}

CtVector Context::mul_cp(const CtVector& ct, double scalar) {
  return mul_cp(ct, PtVector::constant(params_.slot_count, scalar));
}

Context::Meta Context::align_for_add(Meta a, Meta b) {
  if (a.degree != b.degree) {
    const bool a_is_deg2 = a.degree == 2;
    const Meta& hi = a_is_deg2 ? a : b;
    if (hi.level == 0) {
      throw LevelExhausted("rescale required at level 0");
    }
    (a_is_deg2 ? a : b) = normalized(hi);
  }
  const int common = std::min(a.level, b.level);
  ledger_.level_switch += (a.level != common) + (b.level != common);
  return {common, a.degree};
}

Context::Slots Context::summed(const Slots& a, const Slots& b) {
  Slots out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = clamp_raw(wide_int{a[i]} + wide_int{b[i]});
  }
  return out;
}

CtVector Context::combine(const CtVector& a, const CtVector& b, bool subtract) {
  check_shape(a);
  check_shape(b);
  const Meta m = align_for_add({a.level(), a.degree()}, {b.level(), b.degree()});
  Slots out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const wide_int rhs = subtract ? -wide_int{(*b.raw_)[i]} : wide_int{(*b.raw_)[i]};
    out[i] = clamp_raw(wide_int{(*a.raw_)[i]} + rhs);
  }
  ++ledger_.add;
  return make(std::move(out), m);
}

CtVector Context::add_cc(const CtVector& a, const CtVector& b) { return combine(a, b, false); }

CtVector Context::sub_cc(const CtVector& a, const CtVector& b) { return combine(a, b, true); }

CtVector Context::add_cp(const CtVector& ct, const PtVector& pt) {
  check_shape(ct);
  check_shape(pt.size());
  Slots out(ct.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = clamp_raw(wide_int{(*ct.raw_)[i]} + wide_int{quantize_plain(pt.slots[i])});
  }
  ++ledger_.add;
  return make(std::move(out), {ct.level(), ct.degree()});
}

CtVector Context::add_cp(const CtVector& ct, double scalar) {
  return add_cp(ct, PtVector::constant(params_.slot_count, scalar));
}

Context::Slots Context::rotated(const Slots& src, std::size_t k) const {
  Slots out(src.size());
  for (std::size_t i = 0; i < src.size(); ++i) {
    out[i] = src[(i + k) % src.size()];
  }
  return out;
}

CtVector Context::rotate_slots(const CtVector& ct, std::size_t k) {
  check_shape(ct);
  if (k >= params_.slot_count) {
    throw ShapeMismatch("rotation " + std::to_string(k) + " out of range");
  }
  ++ledger_.rotate;
  return make(rotated(*ct.raw_, k), {ct.level(), ct.degree()});
}

CtVector Context::slot_sum(const CtVector& ct) {
  check_shape(ct);
  Slots acc = *ct.raw_;
  for (std::size_t shift = 1; shift < params_.slot_count; shift <<= 1) {
    const Slots rot = rotated(acc, shift);
    ++ledger_.rotate;
    acc = summed(acc, rot);
    ++ledger_.add;
  }
  return make(std::move(acc), {ct.level(), ct.degree()});
}

void Context::release(const CtVector& ct) {
  if (!ct.valid() || live_.erase(ct.id()) == 0) {
    throw DoubleRelease("ciphertext " + std::to_string(ct.id()) + " is not live");
  }
  ledger_.live_ciphertexts = live_.size();
}

}  // namespace hssmlab
