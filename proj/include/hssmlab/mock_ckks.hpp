#pragma once

// Leveled CKKS-style ciphertext simulator.
//
// Slots are held as fixed-point integers on the 2^-scale_bits grid. Every
// operation output is re-quantized (round-to-nearest, ties-to-even) and
// clamped to the symmetric clip bound; those are the only error sources. The
// (level, noise-scale degree) pair follows a lazy-rescale discipline:
// multiplications leave their result at degree 2, and a degree-2 operand is
// rescaled (level - 1, degree 1) only when it enters another multiplication
// or when addition needs matching degrees. Level alignment uses a free
// level switch that is counted separately from rescale.
//
// A Context is not thread-safe. Run one context per worker and merge the
// ledgers afterwards; ciphertext values themselves are immutable and can be
// shared freely.

#include <cstdint>
#include <memory>
#include <span>
#include <unordered_set>
#include <vector>

#include "hssmlab/errors.hpp"
#include "hssmlab/ledger.hpp"

namespace hssmlab {

namespace detail {
__extension__ typedef __int128 wide_int;
}  // namespace detail

struct SimParams {
  int depth_budget = 8;
  int scale_bits = 50;
  std::size_t slot_count = 8;
  double clip_bound = 3.0;
  /// Descriptive only; never affects numerics or levels.
  std::int64_t ring_dim_label = 32768;
  std::uint64_t seed = 0;

  /// Throws InvalidParams when an invariant fails.
  void validate() const;

  /// depth 8, scale 50, batch 8, ring 32768.
  static SimParams reference_profile();
  /// Same profile with 128 slots and clip bound 3.0.
  static SimParams pipeline_profile();
};

/// Public operand of a ciphertext-plaintext operation.
struct PtVector {
  std::vector<double> slots;

  PtVector() = default;
  explicit PtVector(std::vector<double> values) : slots(std::move(values)) {}
  static PtVector constant(std::size_t n, double value) {
    return PtVector(std::vector<double>(n, value));
  }
  std::size_t size() const { return slots.size(); }
};

/// Simulated ciphertext. Immutable once created; copies share storage and id.
class CtVector {
 public:
  CtVector() = default;

  std::size_t size() const { return raw_ ? raw_->size() : 0; }
  int level() const { return level_; }
  int degree() const { return degree_; }
  int scale_bits() const { return scale_bits_; }
  std::uint64_t id() const { return id_; }
  bool valid() const { return raw_ != nullptr; }

  /// Fixed-point slot integers; slot value = raw * 2^-scale_bits.
  std::span<const std::int64_t> raw() const;
  double slot(std::size_t i) const;

 private:
  friend class Context;

  std::shared_ptr<const std::vector<std::int64_t>> raw_;
  int level_ = 0;
  int degree_ = 1;
  int scale_bits_ = 0;
  std::uint64_t id_ = 0;
};

struct Decrypted {
  std::vector<double> values;
  int level = 0;
  int degree = 1;
};

class Context {
 public:
  explicit Context(SimParams params);

  const SimParams& params() const { return params_; }
  const OpLedger& ledger() const { return ledger_; }
  std::size_t slot_count() const { return params_.slot_count; }

  /// Client-side encryption of pre-clipped values.
  CtVector encrypt(std::span<const double> values);
  /// Client-side decryption; metadata is returned unchanged.
  Decrypted decrypt(const CtVector& ct);

  /// Public all-zero ciphertext at full level (a trivial encryption). Not
  /// counted as a client encryption.
  CtVector zeros();

  CtVector normalize_for_mult(const CtVector& ct);
  CtVector mul_cc(const CtVector& a, const CtVector& b);
  CtVector mul_cp(const CtVector& ct, const PtVector& pt);
  CtVector mul_cp(const CtVector& ct, double scalar);
  CtVector add_cc(const CtVector& a, const CtVector& b);
  /// a - b, with the same alignment rules and ledger cost as add_cc.
  CtVector sub_cc(const CtVector& a, const CtVector& b);
  CtVector add_cp(const CtVector& ct, const PtVector& pt);
  CtVector add_cp(const CtVector& ct, double scalar);
  /// Cyclic left shift by k, 0 <= k < slot_count.
  CtVector rotate_slots(const CtVector& ct, std::size_t k);
  /// Rotate-and-add reduction; every output slot holds the total.
  CtVector slot_sum(const CtVector& ct);

  void release(const CtVector& ct);

 private:
  struct Meta {
    int level;
    int degree;
  };
  using Slots = std::vector<std::int64_t>;

  void check_shape(const CtVector& ct) const;
  void check_shape(std::size_t n) const;
  Meta normalized(Meta m);
  CtVector make(Slots slots, Meta meta);
  std::int64_t clamp_raw(detail::wide_int value_raw);
  std::int64_t quantize_plain(double value) const;
  Meta align_for_add(Meta a, Meta b);
  CtVector combine(const CtVector& a, const CtVector& b, bool subtract);
  Slots rotated(const Slots& src, std::size_t k) const;
  Slots summed(const Slots& a, const Slots& b);

  SimParams params_;
  OpLedger ledger_;
  std::int64_t clip_raw_ = 0;
  std::uint64_t next_id_ = 1;
  std::unordered_set<std::uint64_t> live_;
};

/// Validates `params` and returns a context with a zeroed ledger.
Context new_context(const SimParams& params);

}  // namespace hssmlab
