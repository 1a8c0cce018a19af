#include "cidc/report.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "cidc/trace_io.hpp"

namespace cidc {

namespace {

struct Key {
  int n;
  double delta;
  int w;
};

std::string pct(double x) { return format_float(x * 100.0) + "%"; }

}  // namespace

std::string compare_report(const std::vector<MetricsRow>& rows) {
  std::ostringstream os;
  os << "# protocol comparison\n";
  std::set<int> ks;
  for (const MetricsRow& r : rows) ks.insert(r.k);
  for (int k : ks) {
    std::set<int> ns;
    std::set<double> deltas;
    std::set<int> ws;
    for (const MetricsRow& r : rows) {
      if (r.k != k) continue;
      ns.insert(r.n);
      if (r.protocol == "cidc") deltas.insert(r.delta);
      if (r.protocol == "dcf") ws.insert(r.w);
    }
    auto find = [&](const std::string& proto, int n, double delta, int w) -> const MetricsRow* {
      for (const MetricsRow& r : rows)
        if (r.k == k && r.protocol == proto && r.n == n &&
            (proto == "dcf" ? r.w == w : r.delta == delta))
          return &r;
      return nullptr;
    };

    os << "\n## k = " << k << "\n";
    os << "n";
    for (double d : deltas) os << " | cidc p_col d=" << format_float(d);
    for (int w : ws) os << " | dcf p_col w=" << w;
    for (double d : deltas) os << " | cidc d_c(us) d=" << format_float(d);
    for (int w : ws) os << " | dcf d_c(us) w=" << w;
    os << " | model d_c(us) | model mismatch | p_col bound | sat\n";
    for (int n : ns) {
      os << n;
      const MetricsRow* base = nullptr;
      for (double d : deltas) {
        const MetricsRow* r = find("cidc", n, d, 0);
        if (d == *deltas.begin()) base = r;
        os << " | " << (r ? format_float(r->p_col_mean) : "-");
      }
      for (int w : ws) {
        const MetricsRow* r = find("dcf", n, 0.0, w);
        os << " | " << (r ? format_float(r->p_col_mean) : "-");
      }
      for (double d : deltas) {
        const MetricsRow* r = find("cidc", n, d, 0);
        os << " | " << (r ? format_float(r->d_c_mean_us) : "-");
      }
      for (int w : ws) {
        const MetricsRow* r = find("dcf", n, 0.0, w);
        os << " | " << (r ? format_float(r->d_c_mean_us) : "-");
      }
      if (base && base->has_model) {
        os << " | " << format_float(base->d_c_model_us);
        if (base->d_c_mean_us > 0.0)
          os << " | " << pct(std::abs(base->d_c_model_us - base->d_c_mean_us) / base->d_c_mean_us);
        else
          os << " | -";
        os << " | " << format_float(base->p_col_ub);
      } else {
        os << " | - | - | -";
      }
      os << " | " << (base && base->saturated ? "yes" : "no") << "\n";
    }

    // summary over the points present
    for (int w : ws) {
      int held = 0, total = 0;
      for (int n : ns) {
        const MetricsRow* c = find("cidc", n, deltas.empty() ? 0.0 : *deltas.begin(), 0);
        const MetricsRow* d = find("dcf", n, 0.0, w);
        if (!c || !d) continue;
        ++total;
        if (c->p_col_mean < d->p_col_mean) ++held;
      }
      if (total)
        os << "collision ordering cidc < dcf w=" << w << ": " << held << "/" << total
           << " points\n";
      held = 0;
      total = 0;
      for (int n : ns) {
        const MetricsRow* c = find("cidc", n, deltas.empty() ? 0.0 : *deltas.begin(), 0);
        const MetricsRow* d = find("dcf", n, 0.0, w);
        if (!c || !d) continue;
        ++total;
        if (c->d_c_mean_us < d->d_c_mean_us) ++held;
      }
      if (total)
        os << "delay ordering cidc < dcf w=" << w << ": " << held << "/" << total << " points\n";
    }
    double worst = -1.0;
    int worst_n = 0;
    int bound_held = 0, bound_total = 0;
    for (int n : ns) {
      const MetricsRow* c = find("cidc", n, deltas.empty() ? 0.0 : *deltas.begin(), 0);
      if (!c || !c->has_model) continue;
      if (!c->saturated && c->d_c_mean_us > 0.0) {
        const double mis = std::abs(c->d_c_model_us - c->d_c_mean_us) / c->d_c_mean_us;
        if (mis > worst) {
          worst = mis;
          worst_n = n;
        }
      }
      ++bound_total;
      if (c->p_col_mean <= c->p_col_ub) ++bound_held;
    }
    if (worst >= 0.0)
      os << "model delay mismatch: worst " << pct(worst) << " at n=" << worst_n << "\n";
    if (bound_total)
      os << "collision bound: held at " << bound_held << "/" << bound_total << " points\n";
    if (deltas.size() > 1) {
      int ordered = 0, total = 0;
      for (int n : ns) {
        if (n < 100) continue;
        std::vector<double> seq;
        bool all = true;
        for (double d : deltas) {
          const MetricsRow* r = find("cidc", n, d, 0);
          if (!r) {
            all = false;
            break;
          }
          seq.push_back(r->p_col_mean);
        }
        if (!all) continue;
        ++total;
        if (std::is_sorted(seq.begin(), seq.end()) &&
            std::adjacent_find(seq.begin(), seq.end()) == seq.end())
          ++ordered;
      }
      if (total)
        os << "churn ordering (rising p_col with delta, n >= 100): " << ordered << "/" << total
           << " points\n";
    }
  }
  return os.str();
}

}  // namespace cidc
