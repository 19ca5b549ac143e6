#pragma once

#include <cstdint>

namespace hssmlab {

/// Operation counters for one simulated run.
///
/// Everything except `live_ciphertexts` is monotone within a run. Ledgers from
/// independent workers combine with `operator+=`; peaks add, which gives an
/// upper bound on the combined concurrent footprint.
struct OpLedger {
  std::uint64_t mul_ct_ct = 0;
  std::uint64_t mul_ct_pt = 0;
  std::uint64_t add = 0;
  std::uint64_t rescale = 0;
  std::uint64_t level_switch = 0;
  std::uint64_t rotate = 0;
  std::uint64_t encrypt_count = 0;
  std::uint64_t decrypt_count = 0;
  std::uint64_t clip_events = 0;
  std::uint64_t live_ciphertexts = 0;
  std::uint64_t peak_live_ciphertexts = 0;

  OpLedger& operator+=(const OpLedger& other);
  friend bool operator==(const OpLedger&, const OpLedger&) = default;
};

/// Counter differences between two snapshots of the same ledger.
/// Live/peak fields are taken from `after`.
OpLedger ledger_delta(const OpLedger& after, const OpLedger& before);

}  // namespace hssmlab
