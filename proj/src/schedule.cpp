#include "cidc/schedule.hpp"

#include <algorithm>
#include <stdexcept>
#include <unordered_set>

namespace cidc {

ArrivalSchedule ArrivalSchedule::draw(const ProtocolParams& p, std::mt19937_64& rng) {
  const std::int64_t cycle = cycle_minis(p.lambda, p.t_slot);
  if (p.n_vehicles > cycle)
    throw std::invalid_argument("schedule: more vehicles than mini-slots per cycle");
  std::uniform_real_distribution<double> unif(0.0, 1.0 / p.lambda);
  std::unordered_set<std::int64_t> taken;
  std::vector<std::int64_t> offsets(p.n_vehicles);
  for (int v = 0; v < p.n_vehicles; ++v) {
    std::int64_t q;
    do {
      q = quantize_offset(unif(rng), p.t_slot);
    } while (q >= cycle || taken.count(q));
    taken.insert(q);
    offsets[v] = q;
  }
  return ArrivalSchedule(std::move(offsets), cycle);
}

ArrivalSchedule::ArrivalSchedule(std::vector<std::int64_t> offsets, std::int64_t cycle)
    : offsets_(std::move(offsets)), cycle_(cycle) {
  if (cycle_ < 1) throw std::invalid_argument("schedule: cycle must be positive");
  std::unordered_set<std::int64_t> seen;
  for (std::int64_t q : offsets_) {
    if (q < 0 || q >= cycle_) throw std::invalid_argument("schedule: offset outside the cycle");
    if (!seen.insert(q).second) throw std::invalid_argument("schedule: duplicate offset");
  }
  by_offset_.resize(offsets_.size());
  for (int v = 0; v < static_cast<int>(offsets_.size()); ++v) by_offset_[v] = v;
  std::sort(by_offset_.begin(), by_offset_.end(),
            [this](int a, int b) { return offsets_[a] < offsets_[b]; });
}

std::vector<Arrival> ArrivalSchedule::arrivals_in_window(std::int64_t from, std::int64_t to) const {
  std::vector<Arrival> out;
  if (to <= from || offsets_.empty()) return out;
  for (std::int64_t c = from / cycle_; c * cycle_ < to; ++c) {
    const std::int64_t base = c * cycle_;
    for (int v : by_offset_) {
      const std::int64_t mini = base + offsets_[v];
      if (mini < from || mini >= to) continue;
      out.push_back({mini, v});
    }
  }
  return out;
}

}  // namespace cidc
