// Command line front end: run sweeps, evaluate the analytical models,
// compare metrics files, and re-check recorded traces offline.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <regex>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cidc/analytics.hpp"
#include "cidc/config.hpp"
#include "cidc/experiment.hpp"
#include "cidc/invariants.hpp"
#include "cidc/params.hpp"
#include "cidc/report.hpp"
#include "cidc/trace_io.hpp"

namespace {

struct GlobalOpts {
  std::string config_path;
  std::string out_dir;
  int workers = -1;
  std::uint64_t seed = 0;
  bool seed_set = false;
  bool traces = false;
};

cidc::ExperimentConfig load_config(const GlobalOpts& g) {
  cidc::ExperimentConfig cfg;
  if (!g.config_path.empty()) cfg = cidc::parse_config_file(g.config_path);
  if (!g.out_dir.empty()) cfg.out = g.out_dir;
  if (g.workers >= 0) cfg.workers = g.workers;
  if (g.seed_set) cfg.seed = g.seed;
  if (g.traces) cfg.traces = true;
  return cfg;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  return os;
}

int run_simulate(const cidc::ExperimentConfig& cfg) {
  const auto result = cidc::run_experiment(cfg);
  std::filesystem::create_directories(cfg.out);
  const auto path = std::filesystem::path(cfg.out) / "metrics.csv";
  auto os = open_out(path);
  cidc::write_metrics_csv(os, result.rows);
  if (!os.flush()) throw std::runtime_error("short write on " + path.string());
  int saturated = 0;
  for (const auto& r : result.rows) saturated += r.saturated ? 1 : 0;
  std::cout << result.rows.size() << " grid points x " << cfg.rounds << " rounds -> "
            << path.string() << "\n";
  if (saturated > 0) std::cout << saturated << " saturated grid points\n";
  return 0;
}

void analytics_row(std::ostream& os, int n, int k, double lambda, int m,
                   const cidc::SteadyState& s) {
  using cidc::format_float;
  os << n << "," << k << "," << format_float(lambda) << "," << m << ",";
  if (s.cs_bounds.small_n > 0.0)
    os << format_float(s.cs_bounds.small_n) << "," << format_float(s.cs_bounds.large_n);
  else
    os << ",";
  os << ",";
  if (s.delay.saturated) {
    os << ",,,,,,,,";
  } else {
    os << format_float(s.delay.c_s) << "," << format_float(s.delay.p_ck0) << ","
       << format_float(s.delay.d_o * 1e6) << "," << format_float(s.delay.d_c * 1e6) << ",";
    if (s.collision.converged)
      os << format_float(s.collision.upsilon_s) << "," << format_float(s.collision.n_s) << ","
         << format_float(s.collision.p_col);
    else
      os << ",,";
    os << "," << format_float(s.p_col_ub) << "," << format_float(s.n_sat);
  }
  os << "," << (s.saturated ? "true" : "false") << ","
     << (s.collision.converged ? "true" : "false") << "," << s.collision.iterations << "\n";
}

int run_analyze(const cidc::ExperimentConfig& cfg) {
  std::filesystem::create_directories(cfg.out);
  const auto path = std::filesystem::path(cfg.out) / "analytics.csv";
  auto os = open_out(path);
  os << "n,k,lambda,m,c_s_small_n,c_s_large_n,c_s,p_ck0,d_o_us,d_c_us,upsilon_s,n_s,"
        "p_col_numeric,p_col_ub,n_sat,saturated,converged,iterations\n";
  int rows = 0, saturated = 0;
  for (double t_tx : cfg.t_tx) {
    const int k = cidc::derive_k(t_tx, cfg.t_difs, cfg.t_slot);
    for (int n : cfg.n) {
      const auto state = cidc::analyze_point(n, cfg.lambda, cfg.t_slot, k, cfg.m, cfg.t_difs);
      analytics_row(os, n, k, cfg.lambda, cfg.m, state);
      ++rows;
      saturated += state.saturated ? 1 : 0;
    }
  }
  if (!os.flush()) throw std::runtime_error("short write on " + path.string());
  std::cout << rows << " operating points -> " << path.string() << "\n";
  if (saturated > 0) std::cout << saturated << " saturated operating points\n";
  return 0;
}

int run_report(const std::vector<std::string>& paths, const std::string& out_dir) {
  std::vector<cidc::MetricsRow> rows;
  for (const auto& path : paths) {
    auto part = cidc::read_metrics_csv_file(path);
    rows.insert(rows.end(), part.begin(), part.end());
  }
  const std::string text = cidc::compare_report(rows);
  std::cout << text;
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    const auto path = std::filesystem::path(out_dir) / "report.txt";
    auto os = open_out(path);
    os << text;
    if (!os.flush()) throw std::runtime_error("short write on " + path.string());
    std::cerr << "report written to " << path.string() << "\n";
  }
  return 0;
}

/// Expands each input (directory, .slots.csv / .packets.csv path, or bare
/// basename) to the set of trace basenames it covers.
std::vector<std::string> collect_bases(const std::vector<std::string>& inputs) {
  std::set<std::string> bases;
  auto strip = [](std::string s) {
    for (const char* suffix : {".slots.csv", ".packets.csv"}) {
      const std::string_view sv(suffix);
      if (s.size() > sv.size() && s.compare(s.size() - sv.size(), sv.size(), sv) == 0)
        return s.substr(0, s.size() - sv.size());
    }
    return s;
  };
  for (const auto& input : inputs) {
    if (std::filesystem::is_directory(input)) {
      for (const auto& entry : std::filesystem::directory_iterator(input)) {
        const std::string name = entry.path().string();
        if (name.ends_with(".slots.csv")) bases.insert(strip(name));
      }
    } else {
      bases.insert(strip(input));
    }
  }
  return {bases.begin(), bases.end()};
}

/// Rebuilds the run parameters from a trace basename (…_n<N>_k<K>_d<delta>_…)
/// plus the shared radio constants; t_tx is recovered from k, and the churn
/// tag decides whether the exact-estimation identities are checked.
cidc::ProtocolParams params_from_name(const std::string& base,
                                      const cidc::ExperimentConfig& cfg) {
  const std::string name = std::filesystem::path(base).filename().string();
  std::smatch m;
  cidc::ProtocolParams p;
  p.lambda = cfg.lambda;
  p.m_param = cfg.m;
  p.t_slot = cfg.t_slot;
  p.t_difs = cfg.t_difs;
  p.n_cycles = cfg.cycles;
  if (std::regex_search(name, m, std::regex("_n([0-9]+)")))
    p.n_vehicles = std::stoi(m[1].str());
  else
    throw std::runtime_error(name + ": expected _n<count> in the trace name");
  if (std::regex_search(name, m, std::regex("_d([0-9]+)")))
    p.delta_churn = std::stod(m[1].str());
  if (std::regex_search(name, m, std::regex("_k([0-9]+)"))) {
    p.k_busy = std::stoi(m[1].str());
    p.t_tx = p.k_busy * p.t_slot - p.t_difs;
  } else if (cfg.t_tx.size() == 1) {
    p.t_tx = cfg.t_tx[0];
    p.k_busy = cidc::derive_k(p.t_tx, p.t_difs, p.t_slot);
  } else {
    throw std::runtime_error(name + ": expected _k<minislots> in the trace name");
  }
  return p;
}

int run_verify(const std::vector<std::string>& inputs, const cidc::ExperimentConfig& cfg) {
  const auto bases = collect_bases(inputs);
  if (bases.empty()) throw std::runtime_error("no .slots.csv traces found");
  int failures = 0;
  for (const auto& base : bases) {
    try {
      const auto params = params_from_name(base, cfg);
      const auto trace = cidc::read_slot_trace_file(base + ".slots.csv");
      const auto packets = cidc::read_packets_file(base + ".packets.csv");
      const auto rep = cidc::replay_invariants(trace, packets, params);
      const std::int64_t checks = rep.ratio_checks + rep.alignment_checks + rep.state_checks +
                                  rep.outcome_checks + rep.delay_checks;
      if (rep.ok()) {
        std::cout << "PASS " << base << " (" << rep.slots << " slots, " << rep.packets
                  << " packets, " << checks << " checks)\n";
      } else {
        ++failures;
        std::cout << "FAIL " << base << "\n";
        for (const auto& issue : rep.issues) std::cout << "  " << issue << "\n";
      }
    } catch (const std::exception& e) {
      ++failures;
      std::cout << "FAIL " << base << "\n  " << e.what() << "\n";
    }
  }
  std::cout << (static_cast<int>(bases.size()) - failures) << "/" << bases.size()
            << " traces verified\n";
  return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Contention-coordinated broadcast: simulator and model toolkit"};
  app.require_subcommand(1);

  GlobalOpts g;
  app.add_option("--config", g.config_path, "Experiment config, key = value lines")
      ->check(CLI::ExistingFile);
  app.add_option("--out", g.out_dir, "Output directory (overrides the config)");
  app.add_option("--workers", g.workers, "Worker threads, 0 = hardware concurrency")
      ->check(CLI::NonNegativeNumber);
  auto* seed_opt = app.add_option("--seed", g.seed, "Base seed (overrides the config)");
  app.add_flag("--traces", g.traces, "Write per-round slot and packet CSVs");

  auto* sim = app.add_subcommand("simulate", "Run the configured sweep, write metrics.csv");
  sim->fallthrough();
  auto* ana = app.add_subcommand("analyze", "Evaluate the models, write analytics.csv");
  ana->fallthrough();
  auto* rep = app.add_subcommand("report", "Compare protocols across metrics files");
  rep->fallthrough();
  std::vector<std::string> metrics_paths;
  rep->add_option("metrics", metrics_paths, "metrics.csv files")
      ->required()
      ->check(CLI::ExistingFile);
  auto* ver = app.add_subcommand("verify", "Replay recorded traces, re-check every invariant");
  ver->fallthrough();
  std::vector<std::string> verify_inputs;
  ver->add_option("traces", verify_inputs, "Trace directories, .slots.csv files, or basenames")
      ->required();

  CLI11_PARSE(app, argc, argv);
  g.seed_set = seed_opt->count() > 0;

  try {
    const auto cfg = load_config(g);
    if (sim->parsed()) return run_simulate(cfg);
    if (ana->parsed()) return run_analyze(cfg);
    if (rep->parsed()) return run_report(metrics_paths, g.out_dir);
    return run_verify(verify_inputs, cfg);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
