#include "cidc/invariants.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace cidc {

namespace {

constexpr std::size_t kMaxIssues = 16;
constexpr double kDelayTol = 1e-9;  // seconds; CSV keeps nine significant digits

struct ReplayPacket {
  PacketRecord rec;
  std::int64_t gen_slot = -1;
  int effective = 0;
};

}  // namespace

ReplayReport replay_invariants(const std::vector<SlotRow>& trace, const PacketFile& file,
                               const ProtocolParams& p) {
  validate(p);
  ReplayReport rep;
  rep.slots = static_cast<std::int64_t>(trace.size());
  rep.packets = static_cast<std::int64_t>(file.packets.size());
  const std::int64_t m = p.m_param;
  const bool coordinated = file.proto == Protocol::cidc;
  // the ratio cap and the collision-placement identity both follow from
  // entry points built on complete neighbor knowledge; churn corrupts the
  // views on purpose, so those two checks only apply to churn-free traces
  const bool exact = coordinated && p.delta_churn == 0.0;

  auto issue = [&rep](const std::string& what) {
    if (rep.issues.size() < kMaxIssues) rep.issues.push_back(what);
  };

  std::vector<ReplayPacket> pkts;
  pkts.reserve(file.packets.size());
  for (const PacketRecord& r : file.packets) {
    ReplayPacket rp;
    rp.rec = r;
    rp.effective = file.proto == Protocol::dcf && r.entry < 1 ? 1 : r.entry;
    pkts.push_back(rp);
  }
  std::stable_sort(pkts.begin(), pkts.end(),
                   [](const ReplayPacket& a, const ReplayPacket& b) { return a.rec.gen_mini < b.rec.gen_mini; });
  for (const ReplayPacket& rp : pkts)
    if (rp.rec.vehicle < 0 || rp.rec.vehicle >= p.n_vehicles) {
      issue("packet with vehicle out of range");
      ++rep.state_mismatches;
      return rep;
    }

  std::vector<int> counter(p.n_vehicles, -1);
  std::vector<std::int64_t> holder(p.n_vehicles, -1);  // index into pkts
  std::int64_t live = 0;

  std::vector<std::int64_t> busy_slot, busy_prefix{0};
  std::vector<std::int64_t> arrival_mini, expiry_mini;
  std::vector<std::int64_t> tx;  // indices into pkts

  auto tau_between = [&](std::int64_t k1, std::int64_t k2) {
    const auto lo = std::lower_bound(busy_slot.begin(), busy_slot.end(), k1) - busy_slot.begin();
    const auto hi = std::lower_bound(busy_slot.begin(), busy_slot.end(), k2) - busy_slot.begin();
    return busy_prefix[hi] - busy_prefix[lo];
  };
  auto count_in = [](const std::vector<std::int64_t>& xs, std::int64_t g1, std::int64_t g2) {
    return (std::upper_bound(xs.begin(), xs.end(), g2) - xs.begin()) -
           (std::upper_bound(xs.begin(), xs.end(), g1) - xs.begin());
  };
  auto check_ratio = [&](std::int64_t num, std::int64_t den, std::int64_t mini) {
    ++rep.ratio_checks;
    if (m * num > den) {
      ++rep.ratio_violations;
      std::ostringstream os;
      os << "ratio above 1/m at mini " << mini << ": " << num << "/" << den;
      issue(os.str());
    }
  };

  std::size_t next = 0;  // next packet by gen_mini
  std::int64_t start = 0;
  for (std::size_t row_i = 0; row_i < trace.size(); ++row_i) {
    const SlotRow& row = trace[row_i];
    const std::int64_t k = static_cast<std::int64_t>(row_i);
    if (row.slot != k) {
      issue("slot ids are not contiguous from 0");
      ++rep.state_mismatches;
      return rep;
    }
    tx.clear();
    std::int64_t bmax = 0;
    for (int v = 0; v < p.n_vehicles; ++v) {
      if (counter[v] < 0) continue;
      bmax = std::max<std::int64_t>(bmax, counter[v]);
      if (counter[v] == 0) tx.push_back(holder[v]);
    }
    const auto n_o = static_cast<std::int32_t>(tx.size());
    const bool busy = n_o > 0;
    rep.state_checks += 4;
    if ((row.h != 0) != busy || row.n_o != n_o || row.c != live || row.b_max != bmax) {
      ++rep.state_mismatches;
      std::ostringstream os;
      os << "slot " << k << ": trace (h=" << int(row.h) << ",n_o=" << row.n_o << ",c=" << row.c
         << ",b_max=" << row.b_max << ") vs replay (h=" << busy << ",n_o=" << n_o << ",c=" << live
         << ",b_max=" << bmax << ")";
      issue(os.str());
    }
    const std::int64_t span = busy ? p.k_busy : 1;
    const std::int64_t end = start + span;
    if (busy) {
      busy_slot.push_back(k);
      busy_prefix.push_back(busy_prefix.back() + n_o);
    }
    for (std::int64_t pi : tx) {
      counter[pkts[pi].rec.vehicle] = -1;
      holder[pkts[pi].rec.vehicle] = -1;
    }

    // arrivals inside [start, end); q counts transmitters in progress
    std::int64_t q = live;
    if (exact) check_ratio(q, std::max<std::int64_t>(bmax, m * (q + 1)), start);
    while (next < pkts.size() && pkts[next].rec.gen_mini < end) {
      if (pkts[next].rec.gen_mini < start) {
        issue("packet generated before the current slot");
        ++rep.state_mismatches;
        return rep;
      }
      const std::int64_t mini = pkts[next].rec.gen_mini;
      const std::int64_t q_before = q;
      while (next < pkts.size() && pkts[next].rec.gen_mini == mini) {
        ReplayPacket& rp = pkts[next];
        const int v = rp.rec.vehicle;
        if (counter[v] >= 0) {
          const ReplayPacket& old = pkts[holder[v]];
          ++rep.outcome_checks;
          if (old.rec.outcome != Outcome::expired) {
            ++rep.outcome_mismatches;
            std::ostringstream os;
            os << "vehicle " << v << " packet at mini " << old.rec.gen_mini
               << " was replaced but is not marked expired";
            issue(os.str());
          }
          counter[v] = -1;
          holder[v] = -1;
          --live;
          --q;
          expiry_mini.push_back(mini);
        }
        rp.gen_slot = k;
        counter[v] = rp.effective;
        holder[v] = static_cast<std::int64_t>(next);
        ++live;
        ++q;
        arrival_mini.push_back(mini);
        ++next;
      }
      if (exact)
        check_ratio(q, std::max<std::int64_t>(bmax, m * (q_before + 1)), mini);
    }

    // completions at slot end
    for (std::int64_t pi : tx) {
      const ReplayPacket& rp = pkts[pi];
      const Outcome expect = n_o >= 2 ? Outcome::collided : Outcome::sent;
      ++rep.outcome_checks;
      if (rp.rec.outcome != expect || rp.rec.start_tx != start) {
        ++rep.outcome_mismatches;
        std::ostringstream os;
        os << "vehicle " << rp.rec.vehicle << " packet at mini " << rp.rec.gen_mini
           << ": recorded " << outcome_name(rp.rec.outcome) << " from mini " << rp.rec.start_tx
           << ", replay says " << outcome_name(expect) << " from mini " << start;
        issue(os.str());
        continue;
      }
      const double d_o = static_cast<double>(end - rp.rec.gen_mini) * p.t_slot;
      const double d_c = d_o - p.k_busy * p.t_slot + p.t_difs;
      rep.delay_checks += 2;
      if (std::abs(rp.rec.d_o - d_o) > kDelayTol || std::abs(rp.rec.d_c - d_c) > kDelayTol) {
        ++rep.delay_mismatches;
        std::ostringstream os;
        os << "vehicle " << rp.rec.vehicle << " packet at mini " << rp.rec.gen_mini
           << ": delays off the slot arithmetic";
        issue(os.str());
      }
    }
    if (exact && n_o >= 2) {
      for (std::size_t i = 0; i < tx.size(); ++i) {
        for (std::size_t j = i + 1; j < tx.size(); ++j) {
          const ReplayPacket* a = &pkts[tx[i]];
          const ReplayPacket* b = &pkts[tx[j]];
          if (b->rec.gen_mini < a->rec.gen_mini) std::swap(a, b);
          const std::int64_t alpha = b->gen_slot - a->gen_slot;
          const std::int64_t tau = tau_between(a->gen_slot, b->gen_slot);
          const std::int64_t eta = count_in(arrival_mini, a->rec.gen_mini, b->rec.gen_mini) -
                                   count_in(expiry_mini, a->rec.gen_mini, b->rec.gen_mini);
          ++rep.alignment_checks;
          if (alpha % m != 0 || m * (tau - eta) != alpha) {
            ++rep.alignment_violations;
            std::ostringstream os;
            os << "collision at slot " << k << " misaligned: vehicles " << a->rec.vehicle << ","
               << b->rec.vehicle << " alpha=" << alpha << " tau=" << tau << " eta=" << eta;
            issue(os.str());
          }
        }
      }
    }
    live -= n_o;
    for (int v = 0; v < p.n_vehicles; ++v)
      if (counter[v] > 0) --counter[v];
    start = end;
  }

  if (next < pkts.size()) {
    ++rep.state_mismatches;
    issue("packets generated beyond the end of the trace");
  }
  for (int v = 0; v < p.n_vehicles; ++v) {
    if (counter[v] < 0) continue;
    ++rep.outcome_checks;
    if (pkts[holder[v]].rec.outcome != Outcome::expired) {
      ++rep.outcome_mismatches;
      std::ostringstream os;
      os << "vehicle " << v << " packet still waiting at the end is not marked expired";
      issue(os.str());
    }
  }
  return rep;
}

}  // namespace cidc
