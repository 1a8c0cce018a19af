#pragma once

#include <cstdint>

namespace cidc {

/// Radio and protocol constants for one simulated configuration.
/// Times are in seconds. A busy slot spans k_busy mini-slots and an idle
/// slot spans one; k_busy = (t_tx + t_difs) / t_slot must be an exact
/// positive integer.
struct ProtocolParams {
  double lambda = 10.0;      ///< per-vehicle message rate, Hz
  int n_vehicles = 100;
  int m_param = 2;           ///< counter spacing multiplier, >= 1
  double t_slot = 13e-6;     ///< mini-slot length
  double t_tx = 254e-6;      ///< frame transmission time
  double t_difs = 58e-6;
  int k_busy = 24;           ///< derived, see derive_k
  int w_window = 64;         ///< contention window, dcf only
  double delta_churn = 0.0;  ///< percent of the neighbor table forgotten per cycle
  int n_cycles = 160;
  int n_rounds = 10;
  std::uint64_t rng_seed = 1;
};

/// Mini-slots per busy slot. Throws std::invalid_argument naming all three
/// inputs when (t_tx + t_difs) / t_slot is off an integer by more than 1e-9
/// relative, or when the result is not positive.
int derive_k(double t_tx, double t_difs, double t_slot);

/// Mini-slots per message cycle: floor((1 / lambda) / t_slot).
std::int64_t cycle_minis(double lambda, double t_slot);

/// Within-cycle mini-slot index of an arrival offset given in seconds.
std::int64_t quantize_offset(double offset_s, double t_slot);

/// Range checks plus the k_busy relation. Throws std::invalid_argument.
void validate(const ProtocolParams& p);

/// Copy of p with k_busy recomputed from t_tx, t_difs, t_slot.
ProtocolParams with_derived_k(ProtocolParams p);

}  // namespace cidc
