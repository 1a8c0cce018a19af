#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "cidc/params.hpp"

namespace cidc {

struct Arrival {
  std::int64_t mini;  ///< absolute mini-slot index of the generation instant
  int vehicle;
};

/// Periodic per-vehicle arrival pattern: every vehicle generates one message
/// per cycle at a fixed within-cycle offset. Offsets are drawn uniformly over
/// the cycle, quantized to mini-slots, and kept pairwise distinct so at most
/// one arrival lands in any mini-slot.
class ArrivalSchedule {
 public:
  /// Draws offsets for p.n_vehicles vehicles. Throws std::invalid_argument
  /// when n_vehicles exceeds the mini-slots in a cycle (distinct offsets
  /// would be impossible).
  static ArrivalSchedule draw(const ProtocolParams& p, std::mt19937_64& rng);

  /// Schedule with caller-chosen offsets (tests). Offsets must be distinct
  /// and inside [0, cycle).
  ArrivalSchedule(std::vector<std::int64_t> offsets, std::int64_t cycle);

  std::int64_t cycle() const { return cycle_; }
  int n_vehicles() const { return static_cast<int>(offsets_.size()); }
  std::int64_t offset_of(int vehicle) const { return offsets_.at(vehicle); }
  const std::vector<std::int64_t>& offsets() const { return offsets_; }

  /// All arrivals with from <= mini < to, ascending by mini.
  std::vector<Arrival> arrivals_in_window(std::int64_t from, std::int64_t to) const;

 private:
  std::vector<std::int64_t> offsets_;
  std::int64_t cycle_ = 0;
  std::vector<int> by_offset_;  ///< vehicle ids sorted by offset
};

}  // namespace cidc
