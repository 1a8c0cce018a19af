#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace cidc {

/// One vehicle's application-layer knowledge of its neighbors: the offset
/// table plus a per-neighbor mark that tracks whether the neighbor's
/// current message is still contending (generated and not yet received).
/// The contention estimate counts marked neighbors the table knows about,
/// so a neighbor dropped by churn contends invisibly until a message from
/// it is received or the next cycle boundary re-establishes the table.
/// A message in transmission stays marked until the busy slot completes.
class VehicleView {
 public:
  VehicleView(int self, int n_vehicles);

  int self() const { return self_; }
  int size() const { return static_cast<int>(offset_.size()); }
  bool knows(int v) const { return offset_[v] >= 0; }
  std::int64_t offset_of(int v) const { return offset_[v]; }
  int known_count() const { return known_count_; }
  bool contending(int v) const { return marked_[v] != 0; }

  void learn(int v, std::int64_t offset_mini);
  void forget(int v);

  /// A neighbor generated a message; idempotent while one is outstanding
  /// (a replacement after expiry keeps the single per-vehicle mark).
  void on_generated(int v);

  /// A received message clears the mark and (re-)teaches the offset.
  void on_delivered(int v, std::int64_t offset_mini);

  /// A message lost in a collision stops contending at that busy slot.
  void on_destroyed(int v);

  /// Estimated contention intensity: marked neighbors the table knows.
  /// Never includes the estimating vehicle's own packet.
  int estimate() const { return estimate_; }

  /// Known neighbor ids, ascending.
  void known_neighbors(std::vector<int>& out) const;

 private:
  int self_;
  int known_count_ = 0;
  int estimate_ = 0;                 // |marked ∩ known|
  std::vector<std::int64_t> offset_;  // -1 unknown
  std::vector<char> marked_;
};

/// Initial back-off counter for a fresh packet: m_param * (estimate + 1),
/// the new packet counting itself.
int entry_point(int estimate, int m_param);

/// Neighbors replaced per vehicle per cycle: ceil(delta_percent * (n-1) / 100).
int churn_count(double delta_percent, int n_vehicles);

/// Per-cycle neighborhood churn: every vehicle forgets churn_count uniformly
/// chosen known neighbors for the cycle ahead. Offsets on the channel never
/// change; only the estimates are corrupted.
void inject_churn(std::vector<VehicleView>& views, double delta_percent, std::mt19937_64& rng);

/// Cycle-boundary re-establishment: every view learns every offset in the
/// table (entries below zero stay unknown). A neighbor changed by churn is
/// unknown only for the cycle in which it changed; by the next cycle it has
/// been in range long enough to be scheduled again.
void relearn_offsets(std::vector<VehicleView>& views, const std::vector<std::int64_t>& offsets);

}  // namespace cidc
