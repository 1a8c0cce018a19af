#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "cidc/analytics.hpp"
#include "cidc/config.hpp"
#include "cidc/engine.hpp"

namespace cidc {

struct GridPoint {
  Protocol proto = Protocol::cidc;
  int n = 0;
  int w = 0;  ///< dcf only, 0 otherwise
  double delta = 0.0;
  double t_tx = 0.0;
  int k = 0;
};

struct MetricsRow {
  std::string protocol;
  int n = 0;
  int w = 0;  ///< 0 means absent (cidc rows)
  double delta = 0.0;
  int k = 0;
  int rounds = 0;
  double p_col_mean = 0.0;
  double p_col_stderr = 0.0;
  double d_c_mean_us = 0.0;
  double d_o_mean_us = 0.0;
  double expiry_rate = 0.0;
  double upsilon_avg = 0.0;
  bool has_upsilon = false;
  bool saturated = false;
  bool has_model = false;  ///< model columns filled (cidc, analytics on, not saturated)
  double c_s_model = 0.0;
  double d_c_model_us = 0.0;
  double p_col_ub = 0.0;
};

struct GridOutcome {
  GridPoint point;
  std::vector<RoundStats> rounds;
  MetricsRow row;
};

struct AnalyticsEntry {
  int n = 0;
  int k = 0;
  SteadyState state;
};

struct ExperimentResult {
  std::vector<GridOutcome> grid;
  std::vector<AnalyticsEntry> analytics;  ///< one per unique (n, k), when enabled
  std::vector<MetricsRow> rows;           ///< grid order
};

/// Cross product of the config lists: per t_tx, cidc points per (delta, n)
/// and dcf points per (w, n). dcf ignores the churn list (it estimates
/// nothing) and runs at delta 0.
std::vector<GridPoint> expand_grid(const ExperimentConfig& cfg);

ProtocolParams params_for(const ExperimentConfig& cfg, const GridPoint& pt);

/// Runs every grid point for cfg.rounds rounds on a worker pool, reduces
/// metrics, and attaches model columns per (n, k) when analytics is on.
/// With cfg.traces set, writes per-round slot and packet CSVs into cfg.out.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

void write_metrics_csv(std::ostream& os, const std::vector<MetricsRow>& rows);
std::string metrics_csv(const std::vector<MetricsRow>& rows);
std::vector<MetricsRow> read_metrics_csv(std::istream& is, const std::string& source_name);
std::vector<MetricsRow> read_metrics_csv_file(const std::string& path);

/// trace_<proto>_n<N>_k<K>_d<delta>[_w<W>]_r<round> without extension.
std::string trace_basename(const GridPoint& pt, int round);

}  // namespace cidc
