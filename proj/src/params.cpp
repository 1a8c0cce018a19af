#include "cidc/params.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace cidc {

int derive_k(double t_tx, double t_difs, double t_slot) {
  if (!(t_slot > 0.0) || !(t_tx > 0.0) || !(t_difs >= 0.0)) {
    std::ostringstream os;
    os << "derive_k: nonpositive input, t_tx=" << t_tx << " t_difs=" << t_difs
       << " t_slot=" << t_slot;
    throw std::invalid_argument(os.str());
  }
  const double ratio = (t_tx + t_difs) / t_slot;
  const double rounded = std::round(ratio);
  if (rounded < 1.0 || std::abs(ratio - rounded) > 1e-9 * ratio) {
    std::ostringstream os;
    os << "derive_k: (t_tx + t_difs) / t_slot = " << ratio
       << " is not a positive integer (t_tx=" << t_tx << ", t_difs=" << t_difs
       << ", t_slot=" << t_slot << ")";
    throw std::invalid_argument(os.str());
  }
  return static_cast<int>(rounded);
}

std::int64_t cycle_minis(double lambda, double t_slot) {
  if (!(lambda > 0.0) || !(t_slot > 0.0))
    throw std::invalid_argument("cycle_minis: lambda and t_slot must be positive");
  return static_cast<std::int64_t>(std::floor(1.0 / lambda / t_slot));
}

std::int64_t quantize_offset(double offset_s, double t_slot) {
  if (offset_s < 0.0 || !(t_slot > 0.0))
    throw std::invalid_argument("quantize_offset: bad offset or t_slot");
  return static_cast<std::int64_t>(std::floor(offset_s / t_slot));
}

void validate(const ProtocolParams& p) {
  auto fail = [](const std::string& what) { throw std::invalid_argument("params: " + what); };
  if (!(p.lambda > 0.0)) fail("lambda must be positive");
  if (p.n_vehicles < 1) fail("n_vehicles must be at least 1");
  if (p.m_param < 1) fail("m_param must be at least 1");
  if (!(p.t_slot > 0.0)) fail("t_slot must be positive");
  if (p.lambda * p.t_slot >= 1.0) fail("lambda * t_slot must be below 1");
  if (p.w_window < 1) fail("w_window must be at least 1");
  if (p.delta_churn < 0.0 || p.delta_churn > 100.0) fail("delta_churn must lie in [0, 100]");
  if (p.n_cycles < 1) fail("n_cycles must be at least 1");
  if (p.n_rounds < 1) fail("n_rounds must be at least 1");
  if (p.k_busy != derive_k(p.t_tx, p.t_difs, p.t_slot)) fail("k_busy does not match t_tx, t_difs, t_slot");
}

ProtocolParams with_derived_k(ProtocolParams p) {
  p.k_busy = derive_k(p.t_tx, p.t_difs, p.t_slot);
  return p;
}

}  // namespace cidc
