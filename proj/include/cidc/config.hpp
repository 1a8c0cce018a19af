#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "cidc/engine.hpp"

namespace cidc {

/// One sweep description: shared radio constants plus the lists the grid is
/// the cross product of. Key names in config files match the field names.
struct ExperimentConfig {
  double lambda = 10.0;
  double t_slot = 13e-6;
  double t_difs = 58e-6;
  int m = 2;
  int cycles = 160;
  int rounds = 10;
  std::uint64_t seed = 1;
  std::vector<int> n = {25, 50, 75, 100, 125, 150, 175, 200, 225, 250};
  std::vector<int> w = {32, 64, 128};          ///< dcf contention windows
  std::vector<double> delta = {0.0};           ///< churn percentages, cidc only
  std::vector<double> t_tx = {254e-6};         ///< one busy-slot length per value
  std::vector<Protocol> protocols = {Protocol::cidc, Protocol::dcf};
  std::string out = "results";
  bool analytics = true;
  int workers = 0;  ///< 0 picks the hardware thread count
  bool traces = false;
};

/// Parses `key = value` lines ('#' comments, comma-separated lists).
/// Unknown keys, duplicate keys, malformed values, empty sweep lists, and
/// t_tx values giving a non-integral busy-slot length are reported with the
/// source name and line number.
ExperimentConfig parse_config(std::istream& is, const std::string& source_name);
ExperimentConfig parse_config_file(const std::string& path);

}  // namespace cidc
