#pragma once

#include <string>
#include <vector>

#include "cidc/engine.hpp"
#include "cidc/trace_io.hpp"

namespace cidc {

struct ReplayReport {
  std::int64_t slots = 0;
  std::int64_t packets = 0;
  std::int64_t ratio_checks = 0, ratio_violations = 0;
  std::int64_t alignment_checks = 0, alignment_violations = 0;
  std::int64_t state_checks = 0, state_mismatches = 0;    ///< h, n_o, c, b_max rows
  std::int64_t outcome_checks = 0, outcome_mismatches = 0;
  std::int64_t delay_checks = 0, delay_mismatches = 0;
  std::vector<std::string> issues;  ///< first few human-readable mismatches

  bool ok() const {
    return ratio_violations == 0 && alignment_violations == 0 && state_mismatches == 0 &&
           outcome_mismatches == 0 && delay_mismatches == 0;
  }
};

/// Deterministic replay of a recorded round from initial counters alone,
/// cross-checked row by row against the slot trace and packet outcomes:
/// channel state (h, n_o, c, b_max), transmission slots, the delay
/// arithmetic, the packet-to-slot ratio cap 1/m, and the slot-alignment
/// condition m * (tau - eta) == alpha on every collided pair. The ratio
/// and alignment identities presume estimates that count every contender,
/// so they are checked only for coordinated traces recorded with
/// delta_churn == 0; view corruption legitimately breaks both. Packets
/// must be ordered by gen_mini with at most one per vehicle alive at a
/// time.
ReplayReport replay_invariants(const std::vector<SlotRow>& trace, const PacketFile& file,
                               const ProtocolParams& p);

}  // namespace cidc
