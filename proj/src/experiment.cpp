#include "cidc/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "cidc/trace_io.hpp"

namespace cidc {

std::vector<GridPoint> expand_grid(const ExperimentConfig& cfg) {
  std::vector<GridPoint> grid;
  for (double t_tx : cfg.t_tx) {
    const int k = derive_k(t_tx, cfg.t_difs, cfg.t_slot);
    for (Protocol proto : cfg.protocols) {
      if (proto == Protocol::cidc) {
        for (double delta : cfg.delta)
          for (int n : cfg.n) grid.push_back({proto, n, 0, delta, t_tx, k});
      } else {
        for (int w : cfg.w)
          for (int n : cfg.n) grid.push_back({proto, n, w, 0.0, t_tx, k});
      }
    }
  }
  return grid;
}

ProtocolParams params_for(const ExperimentConfig& cfg, const GridPoint& pt) {
  ProtocolParams p;
  p.lambda = cfg.lambda;
  p.n_vehicles = pt.n;
  p.m_param = cfg.m;
  p.t_slot = cfg.t_slot;
  p.t_tx = pt.t_tx;
  p.t_difs = cfg.t_difs;
  p.k_busy = pt.k;
  p.w_window = pt.w > 0 ? pt.w : 1;
  p.delta_churn = pt.delta;
  p.n_cycles = cfg.cycles;
  p.n_rounds = cfg.rounds;
  p.rng_seed = cfg.seed;
  return p;
}

std::string trace_basename(const GridPoint& pt, int round) {
  std::ostringstream os;
  os << "trace_" << protocol_name(pt.proto) << "_n" << pt.n << "_k" << pt.k << "_d"
     << format_float(pt.delta);
  if (pt.proto == Protocol::dcf) os << "_w" << pt.w;
  os << "_r" << round;
  return os.str();
}

namespace {

double round_mean(const std::vector<double>& xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return xs.empty() ? 0.0 : s / static_cast<double>(xs.size());
}

double round_stderr(const std::vector<double>& xs) {
  const std::size_t r = xs.size();
  if (r < 2) return 0.0;
  const double mean = round_mean(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(r - 1) / static_cast<double>(r));
}

MetricsRow reduce_rows(const GridPoint& pt, const std::vector<RoundStats>& rounds) {
  MetricsRow row;
  row.protocol = protocol_name(pt.proto);
  row.n = pt.n;
  row.w = pt.w;
  row.delta = pt.delta;
  row.k = pt.k;
  row.rounds = static_cast<int>(rounds.size());
  std::vector<double> p_cols;
  std::int64_t done = 0, generated = 0, expired = 0, u_minis = 0, flagged = 0;
  double d_o = 0.0, d_c = 0.0, u_sum = 0.0;
  for (const RoundStats& s : rounds) {
    p_cols.push_back(s.p_col());
    done += s.m_sent + s.m_collided;
    generated += s.m_sent + s.m_collided + s.m_expired;
    expired += s.m_expired;
    d_o += s.d_o_sum;
    d_c += s.d_c_sum;
    u_sum += s.upsilon_weighted;
    u_minis += s.upsilon_minis;
    if (s.saturated) ++flagged;
  }
  row.p_col_mean = round_mean(p_cols);
  row.p_col_stderr = round_stderr(p_cols);
  row.d_o_mean_us = done ? d_o / static_cast<double>(done) * 1e6 : 0.0;
  row.d_c_mean_us = done ? d_c / static_cast<double>(done) * 1e6 : 0.0;
  row.expiry_rate = generated ? static_cast<double>(expired) / static_cast<double>(generated) : 0.0;
  row.has_upsilon = pt.proto == Protocol::cidc;
  row.upsilon_avg = u_minis ? u_sum / static_cast<double>(u_minis) : 0.0;
  row.saturated = 2 * flagged > static_cast<std::int64_t>(rounds.size());
  return row;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  ExperimentResult result;
  for (const GridPoint& pt : expand_grid(cfg)) result.grid.push_back({pt, {}, {}});
  for (GridOutcome& g : result.grid) g.rounds.resize(cfg.rounds);

  if (cfg.traces) std::filesystem::create_directories(cfg.out);

  const std::size_t n_tasks = result.grid.size() * static_cast<std::size_t>(cfg.rounds);
  unsigned workers = cfg.workers > 0 ? static_cast<unsigned>(cfg.workers)
                                     : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min<std::size_t>(workers, std::max<std::size_t>(n_tasks, 1));

  std::atomic<std::size_t> next_task{0};
  std::mutex error_mutex;
  std::string first_error;

  auto work = [&]() {
    for (;;) {
      const std::size_t t = next_task.fetch_add(1);
      if (t >= n_tasks) return;
      GridOutcome& g = result.grid[t / cfg.rounds];
      const int round = static_cast<int>(t % cfg.rounds);
      try {
        const ProtocolParams p = params_for(cfg, g.point);
        RoundOptions opt;
        opt.keep_packets = cfg.traces;
        opt.record_trace = cfg.traces;
        RoundResult r = g.point.proto == Protocol::cidc ? run_round_cidc(p, round, opt)
                                                        : run_round_dcf(p, round, opt);
        if (cfg.traces) {
          const std::string base = (std::filesystem::path(cfg.out) /
                                    trace_basename(g.point, round)).string();
          write_slot_trace_file(base + ".slots.csv", r.trace);
          write_packets_file(base + ".packets.csv", g.point.proto, r.packets);
        }
        g.rounds[round] = std::move(r.stats);
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (first_error.empty()) first_error = e.what();
        return;
      }
    }
  };

  std::vector<std::thread> pool;
  for (unsigned i = 0; i < workers; ++i) pool.emplace_back(work);
  for (std::thread& th : pool) th.join();
  if (!first_error.empty()) throw std::runtime_error("experiment: " + first_error);

  if (cfg.analytics) {
    for (const GridOutcome& g : result.grid) {
      if (g.point.proto != Protocol::cidc) continue;
      const bool have = std::any_of(result.analytics.begin(), result.analytics.end(),
                                    [&](const AnalyticsEntry& e) {
                                      return e.n == g.point.n && e.k == g.point.k;
                                    });
      if (have) continue;
      AnalyticsEntry entry;
      entry.n = g.point.n;
      entry.k = g.point.k;
      entry.state = analyze_point(g.point.n, cfg.lambda, cfg.t_slot, g.point.k, cfg.m, cfg.t_difs);
      result.analytics.push_back(entry);
    }
  }

  for (GridOutcome& g : result.grid) {
    g.row = reduce_rows(g.point, g.rounds);
    if (cfg.analytics && g.point.proto == Protocol::cidc) {
      for (const AnalyticsEntry& e : result.analytics) {
        if (e.n != g.point.n || e.k != g.point.k) continue;
        if (!e.state.delay.saturated) {
          g.row.has_model = true;
          g.row.c_s_model = e.state.delay.c_s;
          g.row.d_c_model_us = e.state.delay.d_c * 1e6;
          g.row.p_col_ub = e.state.p_col_ub;
        }
        break;
      }
    }
    result.rows.push_back(g.row);
  }
  return result;
}

void write_metrics_csv(std::ostream& os, const std::vector<MetricsRow>& rows) {
  os << "protocol,N,W,delta,K,rounds,p_col_mean,p_col_stderr,d_c_mean_us,d_o_mean_us,"
        "expiry_rate,upsilon_avg,saturated,c_s_model,d_c_model_us,p_col_ub\n";
  for (const MetricsRow& r : rows) {
    os << r.protocol << ',' << r.n << ',';
    if (r.w > 0) os << r.w;
    os << ',' << format_float(r.delta) << ',' << r.k << ',' << r.rounds << ','
       << format_float(r.p_col_mean) << ',' << format_float(r.p_col_stderr) << ','
       << format_float(r.d_c_mean_us) << ',' << format_float(r.d_o_mean_us) << ','
       << format_float(r.expiry_rate) << ',';
    if (r.has_upsilon) os << format_float(r.upsilon_avg);
    os << ',' << (r.saturated ? "true" : "false") << ',';
    if (r.has_model) {
      os << format_float(r.c_s_model) << ',' << format_float(r.d_c_model_us) << ','
         << format_float(r.p_col_ub);
    } else {
      os << ",,";
    }
    os << '\n';
  }
}

std::string metrics_csv(const std::vector<MetricsRow>& rows) {
  std::ostringstream os;
  write_metrics_csv(os, rows);
  return os.str();
}

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

[[noreturn]] void bad_metrics(const std::string& source, std::size_t line_no,
                              const std::string& what) {
  std::ostringstream os;
  os << source << ":" << line_no << ": " << what;
  throw std::invalid_argument(os.str());
}

}  // namespace

std::vector<MetricsRow> read_metrics_csv(std::istream& is, const std::string& source_name) {
  static const std::vector<std::string> header = {
      "protocol", "N", "W", "delta", "K", "rounds", "p_col_mean", "p_col_stderr",
      "d_c_mean_us", "d_o_mean_us", "expiry_rate", "upsilon_avg", "saturated",
      "c_s_model", "d_c_model_us", "p_col_ub"};
  std::string line;
  if (!std::getline(is, line) || split_fields(line) != header)
    bad_metrics(source_name, 1, "bad metrics header");
  std::vector<MetricsRow> rows;
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = split_fields(line);
    if (f.size() != header.size()) bad_metrics(source_name, line_no, "expected 16 fields");
    auto geti = [&](const std::string& s) -> int {
      try {
        return std::stoi(s);
      } catch (const std::exception&) {
        bad_metrics(source_name, line_no, "expected an integer, got '" + s + "'");
      }
    };
    auto getd = [&](const std::string& s) -> double {
      try {
        return std::stod(s);
      } catch (const std::exception&) {
        bad_metrics(source_name, line_no, "expected a number, got '" + s + "'");
      }
    };
    MetricsRow r;
    r.protocol = f[0];
    if (r.protocol != "cidc" && r.protocol != "dcf")
      bad_metrics(source_name, line_no, "unknown protocol '" + f[0] + "'");
    r.n = geti(f[1]);
    r.w = f[2].empty() ? 0 : geti(f[2]);
    r.delta = getd(f[3]);
    r.k = geti(f[4]);
    r.rounds = geti(f[5]);
    r.p_col_mean = getd(f[6]);
    r.p_col_stderr = getd(f[7]);
    r.d_c_mean_us = getd(f[8]);
    r.d_o_mean_us = getd(f[9]);
    r.expiry_rate = getd(f[10]);
    r.has_upsilon = !f[11].empty();
    if (r.has_upsilon) r.upsilon_avg = getd(f[11]);
    if (f[12] == "true") r.saturated = true;
    else if (f[12] == "false") r.saturated = false;
    else bad_metrics(source_name, line_no, "saturated must be true or false");
    r.has_model = !f[13].empty();
    if (r.has_model) {
      r.c_s_model = getd(f[13]);
      r.d_c_model_us = getd(f[14]);
      r.p_col_ub = getd(f[15]);
    }
    rows.push_back(r);
  }
  return rows;
}

std::vector<MetricsRow> read_metrics_csv_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open metrics file: " + path);
  return read_metrics_csv(is, path);
}

}  // namespace cidc
