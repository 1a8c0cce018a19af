#include "cidc/view.hpp"

#include <cmath>
#include <stdexcept>

namespace cidc {

VehicleView::VehicleView(int self, int n_vehicles)
    : self_(self), offset_(n_vehicles, -1), marked_(n_vehicles, 0) {
  if (self < 0 || self >= n_vehicles) throw std::invalid_argument("view: self out of range");
}

void VehicleView::learn(int v, std::int64_t offset_mini) {
  if (v == self_) return;
  if (offset_mini < 0) throw std::invalid_argument("view: negative offset");
  if (offset_[v] < 0) {
    ++known_count_;
    if (marked_[v]) ++estimate_;
  }
  offset_[v] = offset_mini;
}

void VehicleView::forget(int v) {
  if (v == self_ || offset_[v] < 0) return;
  --known_count_;
  if (marked_[v]) --estimate_;
  offset_[v] = -1;
}

void VehicleView::on_generated(int v) {
  if (v == self_ || marked_[v]) return;
  marked_[v] = 1;
  if (offset_[v] >= 0) ++estimate_;
}

void VehicleView::on_delivered(int v, std::int64_t offset_mini) {
  if (v == self_) return;
  learn(v, offset_mini);
  if (marked_[v]) {
    marked_[v] = 0;
    --estimate_;
  }
}

void VehicleView::on_destroyed(int v) {
  if (v == self_ || !marked_[v]) return;
  marked_[v] = 0;
  if (offset_[v] >= 0) --estimate_;
}

void VehicleView::known_neighbors(std::vector<int>& out) const {
  out.clear();
  for (int v = 0; v < size(); ++v)
    if (offset_[v] >= 0) out.push_back(v);
}

int entry_point(int estimate, int m_param) {
  if (estimate < 0 || m_param < 1) throw std::invalid_argument("entry_point: bad inputs");
  return m_param * (estimate + 1);
}

int churn_count(double delta_percent, int n_vehicles) {
  if (delta_percent < 0.0 || delta_percent > 100.0)
    throw std::invalid_argument("churn_count: delta_percent outside [0, 100]");
  if (delta_percent == 0.0 || n_vehicles < 2) return 0;
  return static_cast<int>(std::ceil(delta_percent * (n_vehicles - 1) / 100.0 - 1e-9));
}

void inject_churn(std::vector<VehicleView>& views, double delta_percent, std::mt19937_64& rng) {
  if (views.empty()) return;
  const int r = churn_count(delta_percent, static_cast<int>(views.size()));
  if (r == 0) return;
  std::vector<int> known;
  for (VehicleView& view : views) {
    view.known_neighbors(known);
    const int take = std::min<int>(r, static_cast<int>(known.size()));
    for (int i = 0; i < take; ++i) {
      std::uniform_int_distribution<int> pick(i, static_cast<int>(known.size()) - 1);
      std::swap(known[i], known[pick(rng)]);
      view.forget(known[i]);
    }
  }
}

void relearn_offsets(std::vector<VehicleView>& views, const std::vector<std::int64_t>& offsets) {
  for (VehicleView& view : views)
    for (int v = 0; v < static_cast<int>(offsets.size()); ++v)
      if (offsets[v] >= 0 && !view.knows(v)) view.learn(v, offsets[v]);
}

}  // namespace cidc
