#pragma once

#include <string>
#include <vector>

#include "cidc/experiment.hpp"

namespace cidc {

/// Deterministic text comparison of the protocols from metrics rows: per-k
/// tables of collision probability and access delay over n, followed by
/// summary lines (ordering counts, model mismatch, bound slack, churn
/// ordering). Purely descriptive; rows may come from several runs.
std::string compare_report(const std::vector<MetricsRow>& rows);

}  // namespace cidc
