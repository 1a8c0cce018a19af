// Full-sweep acceptance run: executes the complete experiment grid once,
// then checks every exit criterion against the collected rows and stats.
// One line per criterion; exits nonzero if any fail.
#include <Eigen/Dense>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <map>
#include <tuple>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "cidc/analytics.hpp"
#include "cidc/config.hpp"
#include "cidc/engine.hpp"
#include "cidc/experiment.hpp"

using namespace cidc;

namespace {

int g_failures = 0;

void record(int idx, const std::string& name, bool pass, const std::string& detail) {
  std::printf("[%2d] %s %s (%s)\n", idx, pass ? "PASS" : "FAIL", name.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

std::string fmt(const char* f, ...) {
  char buf[256];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

struct RowKey {
  Protocol proto;
  int k;
  int w;          // 0 for cidc
  int delta_pct;  // delta * 100, integral for this sweep
  int n;
  bool operator<(const RowKey& o) const {
    return std::tie(proto, k, w, delta_pct, n) < std::tie(o.proto, o.k, o.w, o.delta_pct, o.n);
  }
};

std::map<RowKey, const MetricsRow*> index_rows(const ExperimentResult& r) {
  std::map<RowKey, const MetricsRow*> out;
  for (std::size_t i = 0; i < r.grid.size(); ++i) {
    const GridPoint& pt = r.grid[i].point;
    out[{pt.proto, pt.k, pt.w, static_cast<int>(pt.delta * 100.0 + 0.5), pt.n}] = &r.rows[i];
  }
  return out;
}

const MetricsRow& cidc_row(const std::map<RowKey, const MetricsRow*>& ix, int k, int delta_pct,
                           int n) {
  return *ix.at({Protocol::cidc, k, 0, delta_pct, n});
}

const MetricsRow& dcf_row(const std::map<RowKey, const MetricsRow*>& ix, int k, int w, int n) {
  return *ix.at({Protocol::dcf, k, w, 0, n});
}

const SteadyState& model_at(const ExperimentResult& r, int n, int k) {
  for (const AnalyticsEntry& e : r.analytics)
    if (e.n == n && e.k == k) return e.state;
  throw std::runtime_error("no analytics entry");
}

// ---- criterion 3: scripted five-vehicle scenario at m = 3 ----------------
// Two vehicles start mid-countdown; three arrivals enter while the channel
// alternates busy and idle. The third and fourth packets pick equal-landing
// counters and must destroy each other six slots after the fourth packet's
// arrival slot; the fifth backs far enough off to survive.
void check_scripted_trace() {
  ProtocolParams p;
  p.lambda = 10.0;
  p.n_vehicles = 5;
  p.m_param = 3;
  p.t_slot = 10e-6;
  p.t_tx = 20e-6;
  p.t_difs = 20e-6;
  p.k_busy = 4;
  RoundOptions opt;
  opt.keep_packets = true;
  opt.record_trace = true;
  opt.warmup_cycles = 0;
  SlotEngine eng(p, Protocol::cidc, std::vector<Arrival>{{2, 2}, {9, 3}, {10, 4}}, 40, 7, opt);
  eng.seed_contender(0, 0);
  eng.seed_contender(1, 2);
  eng.run();
  const RoundResult r = eng.take_result();

  bool ok = r.packets.size() == 5;
  std::int64_t collision_slot = -1, arrival_slot = -1;
  if (ok) {
    ok = r.packets[2].entry == 9 && r.packets[3].entry == 6 && r.packets[4].entry == 9;
    ok = ok && r.packets[2].outcome == Outcome::collided &&
         r.packets[3].outcome == Outcome::collided && r.packets[4].outcome == Outcome::sent;
    arrival_slot = r.packets[3].gen_slot;
    for (const SlotRow& row : r.trace)
      if (row.n_o == 2) collision_slot = row.slot;
    ok = ok && collision_slot >= 0 && collision_slot == arrival_slot + 6;
    ok = ok && r.stats.alignment_checks == 1 && r.stats.alignment_violations == 0;
  }
  record(3, "scripted-entry-trace",
         ok, fmt("entries 9/6/9, collision slot %lld = arrival slot %lld + 6",
                 static_cast<long long>(collision_slot), static_cast<long long>(arrival_slot)));
}

// ---- criterion 9: hundredfold load reduction ------------------------------
void check_zero_load() {
  const double lam = 0.1;
  const DelaySolution d = solve_delay_system(25, lam, 13e-6, 24, 2, 58e-6);
  const double want = 2 * 13e-6 + 58e-6;
  const double rel = std::abs(d.d_c - want) / want;

  ProtocolParams p;
  p.lambda = lam;
  p.n_vehicles = 25;
  p.n_cycles = 2;
  p.rng_seed = 909;
  RoundOptions opt;
  opt.warmup_cycles = 0;
  std::int64_t collided = 0, generated = 0;
  for (int round = 0; round < 3; ++round) {
    const RoundResult r = run_round_cidc(p, round, opt);
    collided += r.stats.collided;
    generated += r.stats.generated;
  }
  record(9, "zero-load-limit", !d.saturated && rel <= 0.01 && collided == 0 && generated > 0,
         fmt("solver d_c off by %.3g%%, %lld collisions in %lld packets", rel * 100.0,
             static_cast<long long>(collided), static_cast<long long>(generated)));
}

// ---- criterion 10: stationary-distribution oracle -------------------------
void check_steady_oracle() {
  Eigen::MatrixXd two(2, 2);
  two << 0.9, 0.2, 0.1, 0.8;
  const Eigen::VectorXd pi2 = steady_distribution(two);
  bool ok = std::abs(pi2(0) - 2.0 / 3.0) <= 1e-12 && std::abs(pi2(1) - 1.0 / 3.0) <= 1e-12;

  std::mt19937_64 rng(424242);
  std::uniform_int_distribution<int> dim_of(2, 50);
  std::uniform_real_distribution<double> entry(0.01, 1.0);
  double worst = 0.0;
  for (int trial = 0; trial < 100 && ok; ++trial) {
    const int d = dim_of(rng);
    Eigen::MatrixXd p(d, d);
    for (int j = 0; j < d; ++j) {
      double col = 0.0;
      for (int i = 0; i < d; ++i) {
        p(i, j) = entry(rng);
        col += p(i, j);
      }
      p.col(j) /= col;
    }
    const Eigen::VectorXd pi = steady_distribution(p);
    Eigen::VectorXd v = Eigen::VectorXd::Constant(d, 1.0 / d);
    for (int it = 0; it < 20000; ++it) {
      Eigen::VectorXd next = p * v;
      next /= next.sum();
      const double step = (next - v).lpNorm<Eigen::Infinity>();
      v = next;
      if (step < 1e-14) break;
    }
    const double err = (pi - v).lpNorm<Eigen::Infinity>();
    worst = std::max(worst, err);
    ok = ok && err <= 1e-8;
  }
  record(10, "steady-state-oracle", ok,
         fmt("2-state exact, 100 random chains, worst gap %.2e", worst));
}

}  // namespace

int main() {
  const auto t0 = std::chrono::steady_clock::now();

  ExperimentConfig cfg;
  cfg.t_tx = {254e-6, 332e-6};
  cfg.delta = {0.0, 1.0, 3.0};
  const ExperimentResult res = run_experiment(cfg);
  const auto ix = index_rows(res);

  const auto t1 = std::chrono::steady_clock::now();
  std::printf("sweep: %zu grid points x %d rounds in %.1f s\n", res.grid.size(), cfg.rounds,
              std::chrono::duration<double>(t1 - t0).count());
  std::fflush(stdout);

  // 1: packet-to-slot ratio never exceeds 1/m on churn-free rounds
  {
    std::int64_t checks = 0, violations = 0;
    double worst = 0.0;
    for (const GridOutcome& g : res.grid) {
      if (g.point.proto != Protocol::cidc || g.point.delta != 0.0) continue;
      for (const RoundStats& s : g.rounds) {
        checks += s.ratio_checks;
        violations += s.ratio_violations;
        worst = std::max(worst, s.ratio_max);
      }
    }
    record(1, "ratio-bound", checks > 0 && violations == 0 && worst <= 0.5 + 1e-12,
           fmt("%lld violations in %lld checks, max %.6f", static_cast<long long>(violations),
               static_cast<long long>(checks), worst));
  }

  // 2: every churn-free collision satisfies the counter-alignment identity
  {
    std::int64_t checks = 0, violations = 0;
    for (const GridOutcome& g : res.grid) {
      if (g.point.proto != Protocol::cidc || g.point.delta != 0.0) continue;
      for (const RoundStats& s : g.rounds) {
        checks += s.alignment_checks;
        violations += s.alignment_violations;
      }
    }
    record(2, "collision-alignment", checks > 0 && violations == 0,
           fmt("%lld violations in %lld collision pairs", static_cast<long long>(violations),
               static_cast<long long>(checks)));
  }

  check_scripted_trace();

  // 4: collision probability below the baseline at every window, k = 24
  {
    bool ok = true;
    double worst_gap = 1e9;
    int strict = 0, gapped = 0;
    for (int n : cfg.n) {
      const MetricsRow& c = cidc_row(ix, 24, 0, n);
      for (int w : cfg.w) {
        const MetricsRow& d = dcf_row(ix, 24, w, n);
        if (!(c.p_col_mean < d.p_col_mean)) ok = false;
        ++strict;
        if (n >= 100) {
          const double se = std::sqrt(c.p_col_stderr * c.p_col_stderr +
                                      d.p_col_stderr * d.p_col_stderr);
          const double gap = (d.p_col_mean - c.p_col_mean) / (2.0 * se);
          worst_gap = std::min(worst_gap, gap);
          if (!(gap > 1.0)) ok = false;
          ++gapped;
        }
      }
    }
    record(4, "collision-vs-baseline", ok,
           fmt("%d orderings, %d gap checks, min gap %.1fx of 2 pooled se", strict, gapped,
               worst_gap));
  }

  // 5: channel access delay below the baseline; k = 30 saturates at n = 250
  {
    bool ok = true;
    int checked = 0;
    for (int n : cfg.n)
      for (int w : cfg.w) {
        if (!(cidc_row(ix, 24, 0, n).d_c_mean_us < dcf_row(ix, 24, w, n).d_c_mean_us)) ok = false;
        ++checked;
        if (n <= 200) {
          if (!(cidc_row(ix, 30, 0, n).d_c_mean_us < dcf_row(ix, 30, w, n).d_c_mean_us))
            ok = false;
          ++checked;
        }
      }
    const bool flagged = cidc_row(ix, 30, 0, 250).saturated;
    ok = ok && flagged;
    record(5, "delay-vs-baseline", ok,
           fmt("%d orderings, k=30 n=250 saturated flag %s", checked, flagged ? "set" : "MISSING"));
  }

  // 6: modeled access delay tracks simulation at k = 24; k = 30 model
  //    refuses the n = 250 point
  {
    bool ok = true;
    double worst_small = 0.0, worst_mid = 0.0;
    for (int n : cfg.n) {
      if (n > 225) continue;
      const MetricsRow& c = cidc_row(ix, 24, 0, n);
      if (!c.has_model) {
        ok = false;
        continue;
      }
      const double rel = std::abs(c.d_c_model_us - c.d_c_mean_us) / c.d_c_mean_us;
      if (n <= 150) {
        worst_small = std::max(worst_small, rel);
        if (rel > 0.10) ok = false;
      } else {
        worst_mid = std::max(worst_mid, rel);
        if (rel > 0.20) ok = false;
      }
    }
    const bool refused = model_at(res, 250, 30).delay.saturated;
    ok = ok && refused;
    record(6, "delay-model-match", ok,
           fmt("max err %.1f%% (n<=150), %.1f%% (n<=225), k=30 n=250 %s", worst_small * 100.0,
               worst_mid * 100.0, refused ? "declared saturated" : "NOT refused"));
  }

  // 7: simulated collision probability within the closed-form upper bound
  {
    bool ok = true;
    int checked = 0, violations = 0;
    double tightest = 1e9;
    for (int k : {24, 30})
      for (int n : cfg.n) {
        const SteadyState& st = model_at(res, n, k);
        if (!st.collision.converged) continue;
        const MetricsRow& c = cidc_row(ix, k, 0, n);
        if (!c.has_model) continue;
        ++checked;
        tightest = std::min(tightest, c.p_col_ub - c.p_col_mean);
        if (!(c.p_col_mean <= c.p_col_ub)) ++violations;
      }
    ok = checked > 0 && violations == 0;
    record(7, "collision-bound", ok,
           fmt("%d converged points, %d above bound, min headroom %.2e", checked, violations,
               tightest));
  }

  // 8: estimation under churn still beats the baseline and degrades in order
  {
    bool ok = true;
    for (int n : cfg.n)
      if (!(cidc_row(ix, 24, 100, n).p_col_mean < dcf_row(ix, 24, 64, n).p_col_mean)) ok = false;
    for (int n : cfg.n) {
      if (n < 100) continue;
      const double p0 = cidc_row(ix, 24, 0, n).p_col_mean;
      const double p1 = cidc_row(ix, 24, 100, n).p_col_mean;
      const double p3 = cidc_row(ix, 24, 300, n).p_col_mean;
      if (!(p0 < p1 && p1 < p3)) ok = false;
    }
    record(8, "churn-ordering", ok, "1% churn under baseline at all n, 0 < 1 < 3 at n >= 100");
  }

  check_zero_load();
  check_steady_oracle();

  // 11: per grid point, packets are conserved exactly
  {
    bool ok = true;
    std::int64_t defects = 0;
    for (const GridOutcome& g : res.grid) {
      std::int64_t total = 0;
      for (const RoundStats& s : g.rounds) {
        total += s.sent + s.collided + s.expired;
        if (s.generated != s.sent + s.collided + s.expired) ok = false;
        defects += s.bookkeeping_defects;
      }
      if (total != static_cast<std::int64_t>(g.point.n) * cfg.cycles * cfg.rounds) ok = false;
    }
    ok = ok && defects == 0;
    record(11, "packet-conservation", ok,
           fmt("%zu grid points exact, %lld bookkeeping defects", res.grid.size(),
               static_cast<long long>(defects)));
  }

  // 12: same seed, same bytes, regardless of worker count
  {
    ExperimentConfig small;
    small.n = {50, 150};
    small.w = {64};
    small.cycles = 40;
    small.rounds = 3;
    small.analytics = false;
    small.workers = 2;
    const std::string a = metrics_csv(run_experiment(small).rows);
    small.workers = 3;
    const std::string b = metrics_csv(run_experiment(small).rows);
    record(12, "seeded-determinism", !a.empty() && a == b,
           fmt("%zu byte metrics identical across reruns", a.size()));
  }

  const auto t2 = std::chrono::steady_clock::now();
  std::printf("acceptance: %d/12 passed in %.1f s\n", 12 - g_failures,
              std::chrono::duration<double>(t2 - t0).count());
  return g_failures == 0 ? 0 : 1;
}
