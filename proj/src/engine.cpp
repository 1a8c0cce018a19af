#include "cidc/engine.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

#include "cidc/seeds.hpp"

namespace cidc {

namespace {
constexpr std::int64_t kFar = std::numeric_limits<std::int64_t>::max();
constexpr std::size_t kMaxAlignmentSamples = 8;
}  // namespace

double RoundStats::p_col() const {
  const std::int64_t done = m_sent + m_collided;
  return done ? static_cast<double>(m_collided) / static_cast<double>(done) : 0.0;
}

double RoundStats::expiry_rate() const {
  const std::int64_t gen = m_sent + m_collided + m_expired;
  return gen ? static_cast<double>(m_expired) / static_cast<double>(gen) : 0.0;
}

double RoundStats::d_o_mean() const {
  const std::int64_t done = m_sent + m_collided;
  return done ? d_o_sum / static_cast<double>(done) : 0.0;
}

double RoundStats::d_c_mean() const {
  const std::int64_t done = m_sent + m_collided;
  return done ? d_c_sum / static_cast<double>(done) : 0.0;
}

double RoundStats::upsilon_avg() const {
  return upsilon_minis ? upsilon_weighted / static_cast<double>(upsilon_minis) : 0.0;
}

SlotEngine::SlotEngine(const ProtocolParams& p, Protocol proto, const ArrivalSchedule& sched,
                       std::int64_t horizon_minis, std::uint64_t proto_seed, RoundOptions opt)
    : p_(p), proto_(proto), opt_(opt), rng_(proto_seed), horizon_(horizon_minis) {
  validate(p_);
  if (sched.n_vehicles() != p_.n_vehicles)
    throw std::invalid_argument("engine: schedule size does not match n_vehicles");
  offsets_ = sched.offsets();
  init(sched.arrivals_in_window(0, horizon_));
}

SlotEngine::SlotEngine(const ProtocolParams& p, Protocol proto, std::vector<Arrival> arrivals,
                       std::int64_t horizon_minis, std::uint64_t proto_seed, RoundOptions opt)
    : p_(p), proto_(proto), opt_(opt), rng_(proto_seed), horizon_(horizon_minis) {
  validate(p_);
  // scripted schedule: a vehicle's offset is its first scripted arrival,
  // treated as cycle-periodic; vehicles that never arrive stay unknown
  offsets_.assign(p_.n_vehicles, -1);
  init(std::move(arrivals));
}

void SlotEngine::init(std::vector<Arrival> arrivals) {
  if (horizon_ < 1) throw std::invalid_argument("engine: horizon must be positive");
  cycle_ = cycle_minis(p_.lambda, p_.t_slot);
  warmup_start_ = static_cast<std::int64_t>(opt_.warmup_cycles) * cycle_;
  next_boundary_ = cycle_;
  arrivals_ = std::move(arrivals);
  for (std::size_t i = 1; i < arrivals_.size(); ++i)
    if (arrivals_[i - 1].mini > arrivals_[i].mini)
      throw std::invalid_argument("engine: arrivals must be sorted by mini");
  for (const Arrival& a : arrivals_)
    if (a.vehicle < 0 || a.vehicle >= p_.n_vehicles || a.mini < 0)
      throw std::invalid_argument("engine: arrival out of range");
  counter_.assign(p_.n_vehicles, -1);
  pkt_of_.assign(p_.n_vehicles, -1);
  live_pos_.assign(p_.n_vehicles, -1);
  for (const Arrival& a : arrivals_)
    if (offsets_[a.vehicle] < 0) offsets_[a.vehicle] = a.mini % cycle_;
  if (proto_ == Protocol::cidc) {
    views_.reserve(p_.n_vehicles);
    for (int v = 0; v < p_.n_vehicles; ++v) views_.emplace_back(v, p_.n_vehicles);
    for (int v = 0; v < p_.n_vehicles; ++v)
      for (int u = 0; u < p_.n_vehicles; ++u)
        if (u != v && offsets_[u] >= 0) views_[v].learn(u, offsets_[u]);
  }
  busy_prefix_.push_back(0);
}

void SlotEngine::insert_live(int vehicle, int counter, std::int64_t pkt) {
  counter_[vehicle] = counter;
  pkt_of_[vehicle] = pkt;
  live_pos_[vehicle] = static_cast<int>(live_.size());
  live_.push_back(vehicle);
}

void SlotEngine::remove_live(int vehicle) {
  const int pos = live_pos_[vehicle];
  const int last = live_.back();
  live_[pos] = last;
  live_pos_[last] = pos;
  live_.pop_back();
  live_pos_[vehicle] = -1;
  counter_[vehicle] = -1;
  pkt_of_[vehicle] = -1;
}

void SlotEngine::seed_contender(int vehicle, int counter) {
  if (vehicle < 0 || vehicle >= p_.n_vehicles || counter < 0)
    throw std::invalid_argument("seed_contender: bad vehicle or counter");
  if (counter_[vehicle] >= 0) throw std::invalid_argument("seed_contender: vehicle already holds a packet");
  PacketRecord pk;
  pk.vehicle = vehicle;
  pk.gen_mini = start_mini_;
  pk.gen_slot = slot_;
  pk.entry = counter;
  packets_.push_back(pk);
  insert_live(vehicle, counter, static_cast<std::int64_t>(packets_.size()) - 1);
  ++stats_.generated;
  arrival_mini_.push_back(start_mini_);
  if (offsets_[vehicle] < 0) {
    offsets_[vehicle] = start_mini_ % cycle_;
    for (VehicleView& vw : views_) vw.learn(vehicle, offsets_[vehicle]);
  }
  for (VehicleView& vw : views_) vw.on_generated(vehicle);
}

int SlotEngine::counter_of(int vehicle) const {
  if (vehicle < 0 || vehicle >= p_.n_vehicles) return -1;
  return counter_[vehicle];
}

int SlotEngine::b_max() const {
  int b = 0;
  for (int v : live_) b = std::max(b, counter_[v]);
  return b;
}

void SlotEngine::check_ratio(std::int64_t num, std::int64_t den, std::int64_t weight_minis,
                             std::int64_t from_mini) {
  ++stats_.ratio_checks;
  if (static_cast<std::int64_t>(p_.m_param) * num > den) ++stats_.ratio_violations;
  const double value = den ? static_cast<double>(num) / static_cast<double>(den) : 0.0;
  stats_.ratio_max = std::max(stats_.ratio_max, value);
  const std::int64_t lo = std::max(from_mini, warmup_start_);
  const std::int64_t hi = std::min(from_mini + weight_minis, horizon_);
  if (hi > lo) {
    stats_.upsilon_minis += hi - lo;
    stats_.upsilon_weighted += value * static_cast<double>(hi - lo);
  }
}

void SlotEngine::cross_boundary(std::int64_t boundary_mini) {
  if (boundary_mini / cycle_ >= opt_.warmup_cycles)
    stats_.cycle_c.push_back(static_cast<double>(live_.size() + tx_.size()));
  if (proto_ == Protocol::cidc && p_.delta_churn > 0.0) {
    // churn is cycle-scoped: last cycle's changed neighbors are known
    // again at the boundary, then a fresh draw goes unknown
    relearn_offsets(views_, offsets_);
    inject_churn(views_, p_.delta_churn, rng_);
  }
  next_boundary_ += cycle_;
}

void SlotEngine::fast_forward() {
  // empty channel: every slot is one idle mini and the ratio is zero
  while (start_mini_ < horizon_) {
    const std::int64_t next_arr =
        next_arrival_ < arrivals_.size() ? arrivals_[next_arrival_].mini : kFar;
    if (next_arr <= start_mini_) return;
    const std::int64_t target = std::min({next_arr, next_boundary_, horizon_});
    if (target > start_mini_) {
      if (proto_ == Protocol::cidc) {
        ++stats_.ratio_checks;
        const std::int64_t lo = std::max(start_mini_, warmup_start_);
        if (target > lo) stats_.upsilon_minis += target - lo;
      }
      slot_ += target - start_mini_;
      start_mini_ = target;
    }
    if (start_mini_ >= horizon_) return;
    if (start_mini_ == next_boundary_) cross_boundary(next_boundary_);
    if (start_mini_ == next_arr) return;
  }
}

void SlotEngine::handle_arrival(const Arrival& a, bool vehicle_transmitting) {
  const int v = a.vehicle;
  if (counter_[v] >= 0) {
    // unserved predecessor expires the instant its replacement is generated;
    // the event is silent on the channel, so no view changes
    PacketRecord& old = packets_[pkt_of_[v]];
    old.outcome = Outcome::expired;
    ++stats_.expired;
    if (old.gen_mini >= warmup_start_) ++stats_.m_expired;
    remove_live(v);
    expiry_mini_.push_back(a.mini);
    ++stats_.replacement_arrivals;
  }
  int entry;
  int effective;
  if (proto_ == Protocol::cidc) {
    // contending neighbors the vehicle knows about, plus the vehicle's
    // own frame when it is still in the air at this instant
    const int est = views_[v].estimate() + (vehicle_transmitting ? 1 : 0);
    entry = entry_point(est, p_.m_param);
    effective = entry;
  } else {
    entry = draw_initial_counter(rng_, p_.w_window);
    effective = entry < 1 ? 1 : entry;  // a zero draw transmits at the next boundary
  }
  PacketRecord pk;
  pk.vehicle = v;
  pk.gen_mini = a.mini;
  pk.gen_slot = slot_;
  pk.entry = entry;
  packets_.push_back(pk);
  insert_live(v, effective, static_cast<std::int64_t>(packets_.size()) - 1);
  ++stats_.generated;
  arrival_mini_.push_back(a.mini);
  for (VehicleView& vw : views_) vw.on_generated(v);
}

void SlotEngine::audit_collision_pairs(const std::vector<std::int64_t>& pkts) {
  const std::int64_t m = p_.m_param;
  auto tau_between = [this](std::int64_t k1, std::int64_t k2) {
    const auto lo = std::lower_bound(busy_slot_.begin(), busy_slot_.end(), k1) - busy_slot_.begin();
    const auto hi = std::lower_bound(busy_slot_.begin(), busy_slot_.end(), k2) - busy_slot_.begin();
    return busy_prefix_[hi] - busy_prefix_[lo];
  };
  auto count_in = [](const std::vector<std::int64_t>& xs, std::int64_t g1, std::int64_t g2) {
    // events in (g1, g2]
    return (std::upper_bound(xs.begin(), xs.end(), g2) - xs.begin()) -
           (std::upper_bound(xs.begin(), xs.end(), g1) - xs.begin());
  };
  for (std::size_t i = 0; i < pkts.size(); ++i) {
    for (std::size_t j = i + 1; j < pkts.size(); ++j) {
      const PacketRecord* a = &packets_[pkts[i]];
      const PacketRecord* b = &packets_[pkts[j]];
      if (b->gen_mini < a->gen_mini) std::swap(a, b);
      AlignmentCase cs;
      cs.slot1 = a->gen_slot;
      cs.slot2 = b->gen_slot;
      cs.mini1 = a->gen_mini;
      cs.mini2 = b->gen_mini;
      cs.vehicle1 = a->vehicle;
      cs.vehicle2 = b->vehicle;
      cs.alpha = b->gen_slot - a->gen_slot;
      cs.tau = tau_between(a->gen_slot, b->gen_slot);
      cs.eta = count_in(arrival_mini_, a->gen_mini, b->gen_mini) -
               count_in(expiry_mini_, a->gen_mini, b->gen_mini);
      cs.ok = (cs.alpha % m == 0) && (m * (cs.tau - cs.eta) == cs.alpha);
      if (cs.slot1 == cs.slot2) ++stats_.same_slot_pairs;
      ++stats_.alignment_checks;
      if (!cs.ok) ++stats_.alignment_violations;
      if (stats_.alignment_samples.size() < kMaxAlignmentSamples || !cs.ok) {
        if (stats_.alignment_samples.size() < 4 * kMaxAlignmentSamples)
          stats_.alignment_samples.push_back(cs);
      }
    }
  }
}

bool SlotEngine::step() {
  if (finalized_) return false;
  if (start_mini_ >= horizon_) {
    finalize();
    return false;
  }
  if (live_.empty() && !opt_.record_trace) {
    fast_forward();
    if (start_mini_ >= horizon_) {
      finalize();
      return false;
    }
  }

  const std::int64_t g = start_mini_;
  const int c_k = static_cast<int>(live_.size());
  int bmax = 0;
  tx_.clear();
  for (int v : live_) {
    bmax = std::max(bmax, counter_[v]);
    if (counter_[v] == 0) tx_.push_back(pkt_of_[v]);
  }
  const int n_o = static_cast<int>(tx_.size());
  const bool busy = n_o > 0;
  const std::int64_t span = busy ? p_.k_busy : 1;
  const std::int64_t end = g + span;

  if (opt_.record_trace) {
    SlotRow row;
    row.slot = slot_;
    row.h = busy ? 1 : 0;
    row.n_o = n_o;
    row.c = c_k;
    row.b_max = bmax;
    trace_.push_back(row);
  }
  if (busy) {
    busy_slot_.push_back(slot_);
    busy_prefix_.push_back(busy_prefix_.back() + n_o);
  }
  // transmitters leave the counter table now and complete at slot end
  for (std::int64_t pi : tx_) remove_live(packets_[pi].vehicle);

  // walk boundaries and arrivals inside [g, end) in mini order, keeping the
  // net contending count q (transmitters in progress included)
  std::int64_t q = c_k;
  std::int64_t seg_from = g;
  const bool track_ratio = proto_ == Protocol::cidc;
  const std::int64_t m = p_.m_param;
  while (true) {
    const std::int64_t bm = next_boundary_ < end ? next_boundary_ : kFar;
    const std::int64_t am = (next_arrival_ < arrivals_.size() && arrivals_[next_arrival_].mini < end)
                                ? arrivals_[next_arrival_].mini
                                : kFar;
    if (bm == kFar && am == kFar) break;
    if (bm <= am) {
      cross_boundary(bm);
      continue;
    }
    if (track_ratio && am > seg_from)
      check_ratio(q, std::max<std::int64_t>(bmax, m * (q + 1)), am - seg_from, seg_from);
    const std::int64_t q_before = q;
    while (next_arrival_ < arrivals_.size() && arrivals_[next_arrival_].mini == am) {
      const Arrival a = arrivals_[next_arrival_++];
      bool in_flight = false;
      for (std::int64_t pi : tx_)
        if (packets_[pi].vehicle == a.vehicle) in_flight = true;
      const std::int64_t before = static_cast<std::int64_t>(live_.size());
      handle_arrival(a, in_flight);
      q += static_cast<std::int64_t>(live_.size()) - before;
    }
    // ratio at the arrival mini: count after the events over the virtual
    // entry computed from the count before them
    if (track_ratio)
      check_ratio(q, std::max<std::int64_t>(bmax, m * (q_before + 1)), 1, am);
    seg_from = am + 1;
  }
  if (track_ratio && end > seg_from)
    check_ratio(q, std::max<std::int64_t>(bmax, m * (q + 1)), end - seg_from, seg_from);

  if (busy) {
    for (std::int64_t pi : tx_) {
      PacketRecord& pk = packets_[pi];
      pk.start_tx = g;
      pk.partners = n_o - 1;
      pk.outcome = n_o >= 2 ? Outcome::collided : Outcome::sent;
      pk.d_o = static_cast<double>(end - pk.gen_mini) * p_.t_slot;
      pk.d_c = pk.d_o - static_cast<double>(p_.k_busy) * p_.t_slot + p_.t_difs;
      if (pk.outcome == Outcome::collided) ++stats_.collided; else ++stats_.sent;
      if (pk.gen_mini >= warmup_start_) {
        if (pk.outcome == Outcome::collided) ++stats_.m_collided; else ++stats_.m_sent;
        stats_.d_o_sum += pk.d_o;
        stats_.d_c_sum += pk.d_c;
      }
      if (proto_ == Protocol::cidc) {
        // reception completes at the end of the busy slot: a decodable
        // transmission clears the mark and re-teaches the offset, while
        // a collision is detected on the channel and the lost messages
        // stop contending without being heard
        if (n_o == 1)
          for (VehicleView& vw : views_) vw.on_delivered(pk.vehicle, offsets_[pk.vehicle]);
        else
          for (VehicleView& vw : views_) vw.on_destroyed(pk.vehicle);
      }
    }
    q -= n_o;
    if (n_o >= 2) {
      ++stats_.collision_slots;
      stats_.collision_pairs += static_cast<std::int64_t>(n_o) * (n_o - 1) / 2;
      if (opt_.audit_collisions && proto_ == Protocol::cidc) audit_collision_pairs(tx_);
    }
    tx_.clear();
  }

  if (q != static_cast<std::int64_t>(live_.size())) ++stats_.bookkeeping_defects;

  for (int v : live_) --counter_[v];

  ++slot_;
  start_mini_ = end;
  return true;
}

void SlotEngine::run() {
  while (step()) {
  }
}

void SlotEngine::finalize() {
  if (finalized_) return;
  finalized_ = true;
  // packets still waiting at the horizon never got service
  for (int v : live_) {
    PacketRecord& pk = packets_[pkt_of_[v]];
    pk.outcome = Outcome::expired;
    ++stats_.expired;
    if (pk.gen_mini >= warmup_start_) ++stats_.m_expired;
  }
  // Saturation signature: a backlog that keeps pulling the running mean of
  // the cycle-start contending count upward through every cycle of the
  // final quarter. A stationary count crosses its own mean constantly, so
  // this never fires off a plateau that was reached before the window.
  const std::vector<double>& cs = stats_.cycle_c;
  bool growth = false;
  if (cs.size() >= 8) {
    const std::size_t tail = cs.size() - cs.size() / 4;
    double sum = 0.0;
    for (std::size_t t = 0; t < tail; ++t) sum += cs[t];
    double count = static_cast<double>(tail);
    growth = true;
    for (std::size_t t = tail; t < cs.size(); ++t) {
      if (!(cs[t] * count > sum)) {
        growth = false;
        break;
      }
      sum += cs[t];
      count += 1.0;
    }
  }
  stats_.saturated = stats_.expiry_rate() > 0.05 || growth;
}

RoundResult SlotEngine::take_result() {
  if (!finalized_) finalize();
  RoundResult r;
  r.stats = std::move(stats_);
  if (opt_.keep_packets) r.packets = std::move(packets_);
  if (opt_.record_trace) r.trace = std::move(trace_);
  return r;
}

int draw_initial_counter(std::mt19937_64& rng, int w) {
  if (w < 1) throw std::invalid_argument("draw_initial_counter: w must be at least 1");
  std::uniform_int_distribution<int> d(0, w - 1);
  return d(rng);
}

std::uint64_t schedule_seed(std::uint64_t base, int n, int round) {
  return mix_seed({base, 0x5C3Dull, static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(round)});
}

std::uint64_t protocol_seed(std::uint64_t base, Protocol proto, int n, int w, double delta,
                            int k, int round) {
  const std::uint64_t ptag = proto == Protocol::cidc ? 0xC1Dull : 0xDCFull;
  const auto dmilli = static_cast<std::uint64_t>(delta * 1000.0 + 0.5);
  return mix_seed({base, ptag, static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(w),
                   dmilli, static_cast<std::uint64_t>(k), static_cast<std::uint64_t>(round)});
}

namespace {

RoundResult run_round(const ProtocolParams& p, Protocol proto, int round, RoundOptions opt) {
  validate(p);
  std::mt19937_64 srng(schedule_seed(p.rng_seed, p.n_vehicles, round));
  const ArrivalSchedule sched = ArrivalSchedule::draw(p, srng);
  const std::int64_t horizon = cycle_minis(p.lambda, p.t_slot) * p.n_cycles;
  const int w = proto == Protocol::dcf ? p.w_window : 0;
  const std::uint64_t pseed =
      protocol_seed(p.rng_seed, proto, p.n_vehicles, w, p.delta_churn, p.k_busy, round);
  SlotEngine eng(p, proto, sched, horizon, pseed, opt);
  eng.run();
  return eng.take_result();
}

}  // namespace

RoundResult run_round_cidc(const ProtocolParams& p, int round, RoundOptions opt) {
  return run_round(p, Protocol::cidc, round, opt);
}

RoundResult run_round_dcf(const ProtocolParams& p, int round, RoundOptions opt) {
  return run_round(p, Protocol::dcf, round, opt);
}

}  // namespace cidc
