#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "cidc/params.hpp"
#include "cidc/schedule.hpp"
#include "cidc/view.hpp"

namespace cidc {

enum class Protocol { cidc, dcf };

enum class Outcome : std::uint8_t { sent, collided, expired };

struct PacketRecord {
  int vehicle = -1;
  std::int64_t gen_mini = 0;
  std::int64_t gen_slot = 0;
  int entry = 0;               ///< initial counter; dcf records the raw draw
  std::int64_t start_tx = -1;  ///< first mini of the transmission slot, -1 if never sent
  Outcome outcome = Outcome::expired;
  double d_o = 0.0;            ///< generation to end of transmission slot, seconds
  double d_c = 0.0;            ///< d_o - k_busy * t_slot + t_difs
  int partners = 0;            ///< other packets transmitted in the same slot
};

struct SlotRow {
  std::int64_t slot = 0;
  std::uint8_t h = 0;       ///< channel busy this slot
  std::int32_t n_o = 0;     ///< transmissions completing at slot end
  std::int32_t c = 0;       ///< contending packets at slot start, transmitters included
  std::int32_t b_max = 0;   ///< largest back-off counter at slot start
};

/// One audited pair of packets destroyed in the same slot. In a zero-churn
/// round the counter arithmetic forces m * (tau - eta) == alpha, where alpha
/// is the arrival slot gap, tau the transmissions completed between the two
/// arrival instants, and eta the net contention-increasing arrivals between
/// the two arrival mini-slots.
struct AlignmentCase {
  std::int64_t slot1 = 0, slot2 = 0;
  std::int64_t mini1 = 0, mini2 = 0;
  int vehicle1 = -1, vehicle2 = -1;
  std::int64_t tau = 0, eta = 0, alpha = 0;
  bool ok = false;
};

struct RoundOptions {
  bool keep_packets = false;
  bool record_trace = false;      ///< per-slot rows; disables the idle fast path
  bool audit_collisions = true;   ///< pairwise slot-alignment audit of collisions
  int warmup_cycles = 10;         ///< cycles excluded from the metrics window
};

struct RoundStats {
  // whole-round packet accounting; generated == sent + collided + expired
  std::int64_t generated = 0, sent = 0, collided = 0, expired = 0;
  // metrics window (packets generated after warm-up)
  std::int64_t m_sent = 0, m_collided = 0, m_expired = 0;
  double d_o_sum = 0.0, d_c_sum = 0.0;  ///< seconds, over windowed sent + collided
  double upsilon_weighted = 0.0;        ///< ratio integrated over windowed mini-slots
  std::int64_t upsilon_minis = 0;
  std::int64_t ratio_checks = 0, ratio_violations = 0;
  double ratio_max = 0.0;
  std::int64_t collision_slots = 0, collision_pairs = 0;
  std::int64_t alignment_checks = 0, alignment_violations = 0;
  std::int64_t same_slot_pairs = 0;       ///< collided pairs that arrived in one slot
  std::int64_t replacement_arrivals = 0;  ///< arrivals that expired a predecessor
  std::int64_t bookkeeping_defects = 0;   ///< per-slot contender-count audit, must stay 0
  std::vector<double> cycle_c;            ///< contending count at post-warm-up cycle starts
  bool saturated = false;
  std::vector<AlignmentCase> alignment_samples;  ///< first few audited pairs

  double p_col() const;        ///< windowed collided / (sent + collided)
  double expiry_rate() const;  ///< windowed expired / generated
  double d_o_mean() const;
  double d_c_mean() const;
  double upsilon_avg() const;
};

struct RoundResult {
  RoundStats stats;
  std::vector<PacketRecord> packets;  ///< when keep_packets
  std::vector<SlotRow> trace;         ///< when record_trace
};

/// Slot-resolution broadcast channel shared by both access policies. The
/// channel is busy exactly when some counter is zero at slot start; all
/// zero-counter packets transmit and two or more destroy each other, with no
/// retransmission. Counters of waiting packets decrement once at slot end
/// regardless of slot length. A vehicle holds at most one packet; a new
/// arrival expires an unserved predecessor and takes its place.
///
/// cidc draws the initial counter from the vehicle's intensity estimate,
/// m * (estimate + 1); dcf draws it uniformly from {0, .., w - 1}, a zero
/// draw transmitting at the next slot boundary.
class SlotEngine {
 public:
  /// Scheduled round: arrivals and neighbor offsets from the schedule,
  /// views start fully learned.
  SlotEngine(const ProtocolParams& p, Protocol proto, const ArrivalSchedule& sched,
             std::int64_t horizon_minis, std::uint64_t proto_seed, RoundOptions opt = {});

  /// Scripted round (tests): explicit arrival list; a vehicle's offset is
  /// its first scripted arrival and views start fully learned.
  SlotEngine(const ProtocolParams& p, Protocol proto, std::vector<Arrival> arrivals,
             std::int64_t horizon_minis, std::uint64_t proto_seed, RoundOptions opt = {});

  /// Test hook: pre-existing packet with a given remaining counter; the
  /// vehicle's offset becomes the current mini-slot if it had none, so
  /// every view counts the seeded packet. Call before stepping.
  void seed_contender(int vehicle, int counter);

  bool step();  ///< one slot; false once the horizon is reached
  void run();   ///< steps to the horizon and finalizes stats

  // slot-start probes
  std::int64_t slot() const { return slot_; }
  std::int64_t slot_start_mini() const { return start_mini_; }
  int contending() const { return static_cast<int>(live_.size()); }
  int counter_of(int vehicle) const;  ///< -1 when the vehicle holds no packet
  int b_max() const;
  const VehicleView& view(int vehicle) const { return views_.at(vehicle); }
  const std::vector<PacketRecord>& packets() const { return packets_; }

  RoundResult take_result();

 private:
  void init(std::vector<Arrival> arrivals);
  void insert_live(int vehicle, int counter, std::int64_t pkt);
  void remove_live(int vehicle);
  void fast_forward();
  void cross_boundary(std::int64_t boundary_mini);
  void handle_arrival(const Arrival& a, bool vehicle_transmitting);
  void check_ratio(std::int64_t num, std::int64_t den, std::int64_t weight_minis, std::int64_t from_mini);
  void audit_collision_pairs(const std::vector<std::int64_t>& pkts);
  void finalize();

  ProtocolParams p_;
  Protocol proto_;
  RoundOptions opt_;
  std::mt19937_64 rng_;
  std::int64_t horizon_ = 0;
  std::int64_t cycle_ = 0;
  std::int64_t warmup_start_ = 0;

  std::vector<Arrival> arrivals_;
  std::size_t next_arrival_ = 0;
  std::vector<std::int64_t> offsets_;  // within-cycle offset per vehicle (placeholder when scripted)

  std::int64_t slot_ = 0;
  std::int64_t start_mini_ = 0;
  std::int64_t next_boundary_ = 0;

  // contender table; live_ holds vehicle ids, live_pos_[v] its position or -1
  std::vector<int> counter_;
  std::vector<std::int64_t> pkt_of_;
  std::vector<int> live_;
  std::vector<int> live_pos_;

  std::vector<VehicleView> views_;  // empty for dcf
  std::vector<PacketRecord> packets_;
  std::vector<std::int64_t> tx_;  // packet indices transmitting this slot

  // round history for the alignment audit
  std::vector<std::int64_t> busy_slot_;    // slot ids of busy slots
  std::vector<std::int64_t> busy_prefix_;  // running n_o totals, busy_prefix_[i] = sum over busy_slot_[0..i)
  std::vector<std::int64_t> arrival_mini_;
  std::vector<std::int64_t> expiry_mini_;

  RoundStats stats_;
  std::vector<SlotRow> trace_;
  bool finalized_ = false;
};

/// dcf initial counter, uniform over {0, .., w - 1}.
int draw_initial_counter(std::mt19937_64& rng, int w);

/// Schedule-stream seed shared by every protocol variant at (n, round).
std::uint64_t schedule_seed(std::uint64_t base, int n, int round);

/// Protocol-stream seed, distinct per (protocol, n, w, delta, k, round).
std::uint64_t protocol_seed(std::uint64_t base, Protocol proto, int n, int w,
                            double delta, int k, int round);

/// One full round with stream derivation from p.rng_seed and the round index:
/// draws the arrival schedule, runs p.n_cycles cycles, returns the result.
RoundResult run_round_cidc(const ProtocolParams& p, int round, RoundOptions opt = {});
RoundResult run_round_dcf(const ProtocolParams& p, int round, RoundOptions opt = {});

}  // namespace cidc
