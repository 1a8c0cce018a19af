#include "cidc/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

namespace cidc {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(what);
}

double binom_pmf(int n, double p, int x) {
  if (x < 0 || x > n) return 0.0;
  if (p <= 0.0) return x == 0 ? 1.0 : 0.0;
  if (p >= 1.0) return x == n ? 1.0 : 0.0;
  const double lg = std::lgamma(n + 1.0) - std::lgamma(x + 1.0) - std::lgamma(n - x + 1.0) +
                    x * std::log(p) + (n - x) * std::log1p(-p);
  return std::exp(lg);
}

/// pmf of Binomial(n, p) over x = 0..x_max
std::vector<double> binom_row(int n, double p, int x_max) {
  std::vector<double> row(x_max + 1);
  for (int x = 0; x <= x_max; ++x) row[x] = binom_pmf(n, p, x);
  return row;
}

}  // namespace

double steady_ratio(int n, double lambda, double t_s, int k, double n_s, double p_ck0) {
  require(n >= 1 && lambda > 0.0 && t_s > 0.0 && k >= 1 && n_s > 0.0, "steady_ratio: bad inputs");
  require(p_ck0 >= 0.0 && p_ck0 <= 1.0, "steady_ratio: p_ck0 outside [0, 1]");
  if (p_ck0 >= 1.0) throw saturation_error("steady_ratio: empty-channel probability at 1");
  const double load = lambda * n * t_s;
  const double denom = n_s - load * (k - 1);
  if (denom <= 0.0) {
    std::ostringstream os;
    os << "steady_ratio: beyond saturation, n_s - lambda*n*(k-1)*t_s = " << denom << " at n=" << n;
    throw saturation_error(os.str());
  }
  return load / ((1.0 - p_ck0) * denom);
}

double saturation_threshold(double lambda, double t_s, int k, int m, double n_s, double p_ck0) {
  require(lambda > 0.0 && t_s > 0.0 && k >= 1 && m >= 1 && n_s > 0.0,
          "saturation_threshold: bad inputs");
  require(p_ck0 >= 0.0 && p_ck0 < 1.0, "saturation_threshold: p_ck0 outside [0, 1)");
  return n_s / (lambda * (m / (1.0 - p_ck0) + k - 1) * t_s);
}

Eigen::MatrixXd transition_matrix(int n, double lambda, double t_s, int k, double upsilon_s,
                                  double p_col) {
  require(n >= 1 && lambda > 0.0 && t_s > 0.0 && k >= 1, "transition_matrix: bad inputs");
  require(lambda * t_s < 1.0 && lambda * k * t_s < 1.0,
          "transition_matrix: per-vehicle arrival probability reaches 1");
  require(upsilon_s >= 0.0 && upsilon_s <= 1.0, "transition_matrix: upsilon_s outside [0, 1]");
  require(p_col >= 0.0 && p_col <= 1.0, "transition_matrix: p_col outside [0, 1]");
  const std::vector<double> idle = binom_row(n, lambda * t_s, n);
  const std::vector<double> busyk = binom_row(n, lambda * k * t_s, n);
  Eigen::MatrixXd mat = Eigen::MatrixXd::Zero(n + 1, n + 1);
  auto clip = [n](int i) { return std::clamp(i, 0, n); };
  for (int j = 0; j <= n; ++j) {
    for (int x = 0; x <= n; ++x) {
      // idle slot: count grows by the arrivals
      mat(clip(j + x), j) += (1.0 - upsilon_s) * idle[x];
      // busy slot: one served packet leaves, a second is lost on collision
      mat(clip(j - 2 + x), j) += upsilon_s * p_col * busyk[x];
      mat(clip(j - 1 + x), j) += upsilon_s * (1.0 - p_col) * busyk[x];
    }
  }
  for (int j = 0; j <= n; ++j) {
    const double s = mat.col(j).sum();
    if (s > 0.0) mat.col(j) /= s;
  }
  return mat;
}

Eigen::VectorXd steady_distribution(const Eigen::MatrixXd& p) {
  const Eigen::Index n = p.rows();
  require(n >= 1 && p.cols() == n, "steady_distribution: matrix must be square");
  for (Eigen::Index j = 0; j < n; ++j)
    if (std::abs(p.col(j).sum() - 1.0) > 1e-6)
      throw std::invalid_argument("steady_distribution: columns must sum to 1");
  const Eigen::MatrixXd balance = p - Eigen::MatrixXd::Identity(n, n);
  Eigen::FullPivLU<Eigen::MatrixXd> kernel_check(balance);
  if (n - kernel_check.rank() > 1)
    throw numeric_error("steady_distribution: stationary vector is not unique");
  Eigen::MatrixXd a = balance;
  a.row(n - 1).setOnes();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  rhs(n - 1) = 1.0;
  Eigen::VectorXd pi = a.fullPivLu().solve(rhs);
  pi = pi.cwiseMax(0.0);
  const double total = pi.sum();
  if (!(total > 0.0)) throw numeric_error("steady_distribution: degenerate solution");
  pi /= total;
  const double residual = (balance * pi).lpNorm<Eigen::Infinity>();
  if (residual > 1e-9) {
    std::ostringstream os;
    os << "steady_distribution: residual " << residual << " exceeds 1e-9";
    throw numeric_error(os.str());
  }
  return pi;
}

namespace {

double mean_service_delay(double c, int n, double t_s, int k, int m) {
  const double p0 = std::pow(1.0 - c / n, n);
  return (c + 1.0 - (1.0 - p0) / 2.0) * k * t_s + (m * (c + 1.0) - c) * t_s;
}

}  // namespace

DelaySolution solve_delay_system(int n, double lambda, double t_s, int k, int m, double t_difs) {
  require(n >= 1 && lambda > 0.0 && t_s > 0.0 && k >= 1 && m >= 1 && t_difs >= 0.0,
          "solve_delay_system: bad inputs");
  auto g = [&](double c) { return n * lambda * mean_service_delay(c, n, t_s, k, m) - c; };
  DelaySolution out;
  // g(0) > 0 always; march for the first sign change, then bisect
  const int steps = 4096;
  double lo = 0.0, hi = 0.0;
  bool bracketed = false;
  for (int i = 1; i <= steps; ++i) {
    const double c = static_cast<double>(n) * i / steps;
    if (g(c) <= 0.0) {
      hi = c;
      bracketed = true;
      break;
    }
    lo = c;
  }
  if (!bracketed) {
    out.saturated = true;
    return out;
  }
  for (int it = 0; it < 200 && (hi - lo) > 1e-12 * std::max(1.0, hi); ++it) {
    const double mid = 0.5 * (lo + hi);
    if (g(mid) > 0.0) lo = mid; else hi = mid;
  }
  out.c_s = 0.5 * (lo + hi);
  out.d_o = mean_service_delay(out.c_s, n, t_s, k, m);
  out.d_c = contention_delay(out.d_o, k, t_s, t_difs);
  out.p_ck0 = std::pow(1.0 - out.c_s / n, n);
  return out;
}

double contention_delay(double d_o, int k, double t_s, double t_difs) {
  require(d_o >= 0.0 && k >= 1 && t_s > 0.0 && t_difs >= 0.0, "contention_delay: bad inputs");
  const double d_c = d_o - k * t_s + t_difs;
  if (d_c < 0.0) throw std::invalid_argument("contention_delay: negative result");
  return d_c;
}

CsBounds approx_cs(int n, double lambda, double t_s, int k, int m) {
  require(n >= 1 && lambda > 0.0 && t_s > 0.0 && k >= 1 && m >= 1, "approx_cs: bad inputs");
  const double load = n * lambda * t_s;
  const double denom = 1.0 - load * (k + m - 1);
  if (denom <= 0.0) {
    std::ostringstream os;
    os << "approx_cs: beyond saturation, 1 - n*lambda*(k+m-1)*t_s = " << denom << " at n=" << n;
    throw saturation_error(os.str());
  }
  CsBounds b;
  b.small_n = load * (k + m) / denom;
  b.large_n = load * (k / 2.0 + m) / denom;
  return b;
}

namespace {

/// Pairwise alignment sum: probability that a packet collides with a later
/// arrival, doubled for the symmetric earlier-arrival case.
double alignment_sum(const Eigen::VectorXd& dist, int n, double lambda, double t_s, int k, int m,
                     double u) {
  if (n < 3) return 0.0;
  const double t_bar = ((1.0 - u) + u * k) * t_s;
  const double pa_second =
      (1.0 - u) * (1.0 - std::pow(1.0 - lambda * t_s, n)) +
      u * (1.0 - std::pow(1.0 - lambda * k * t_s, n));
  const int c1p_max = n - 2;
  // tx_row[beta]: counts over the slot gap beta*m; ar_row[beta]: arrivals
  // over the same gap at the ratio-weighted mean slot length
  std::vector<std::vector<double>> tx_row(c1p_max + 1), ar_row(c1p_max + 1);
  for (int beta = 1; beta <= c1p_max; ++beta) {
    const int alpha = beta * m;
    tx_row[beta] = binom_row(alpha, u, c1p_max);
    ar_row[beta] = binom_row(n, std::min(lambda * alpha * t_bar, 1.0), c1p_max);
  }
  double total = 0.0;
  for (int c1p = 1; c1p <= c1p_max; ++c1p) {
    const double w = dist(c1p + 2);
    if (w <= 0.0) continue;
    double inner = 0.0;
    for (int beta = 1; beta <= c1p; ++beta) {
      double s = 0.0;
      for (int tau = beta; tau <= c1p; ++tau) s += tx_row[beta][tau] * ar_row[beta][tau - beta];
      inner += s;
    }
    total += w * inner;
  }
  return std::min(1.0, 2.0 * pa_second * total);
}

}  // namespace

CollisionNumeric collision_probability_numeric(int n, double lambda, double t_s, int k, int m,
                                               double t_difs, CollisionOptions opt) {
  require(opt.tol > 0.0 && opt.max_iterations >= 1 && opt.damping > 0.0 && opt.damping <= 1.0,
          "collision_probability_numeric: bad options");
  CollisionNumeric out;
  const DelaySolution delay = solve_delay_system(n, lambda, t_s, k, m, t_difs);
  if (delay.saturated) {
    out.saturated = true;
    return out;
  }
  double p0 = delay.p_ck0;
  double p_col = 0.0;
  double n_s = 1.0;
  for (int it = 1; it <= opt.max_iterations; ++it) {
    out.iterations = it;
    double u;
    try {
      u = steady_ratio(n, lambda, t_s, k, n_s, p0);
    } catch (const saturation_error&) {
      out.saturated = true;
      return out;
    }
    if (u >= 1.0 / m) {
      out.saturated = true;  // ratio cap breached, no stable operating point
      return out;
    }
    const Eigen::MatrixXd chain = transition_matrix(n, lambda, t_s, k, u, p_col);
    out.c_dist = steady_distribution(chain);
    p0 = out.c_dist(0);
    const double pc = alignment_sum(out.c_dist, n, lambda, t_s, k, m, u);
    const double applied = p_col + opt.damping * (pc - p_col);
    const bool done = std::abs(applied - p_col) < opt.tol;
    p_col = applied;
    n_s = 1.0 + p_col;
    out.upsilon_s = u;
    if (done) {
      out.converged = true;
      break;
    }
  }
  out.p_col = p_col;
  out.n_s = n_s;
  out.p_ck0 = p0;
  return out;
}

double collision_upper_bound(int n, double lambda, double t_s, int k, double p_ck0) {
  require(n >= 1 && lambda > 0.0 && t_s > 0.0 && k >= 1, "collision_upper_bound: bad inputs");
  require(p_ck0 >= 0.0 && p_ck0 <= 1.0, "collision_upper_bound: p_ck0 outside [0, 1]");
  require(lambda * k * t_s < 1.0, "collision_upper_bound: per-vehicle arrival probability reaches 1");
  const double b1 = lambda * n * t_s;
  const double bk1 = lambda * n * (k - 1) * t_s;
  const double busy = 1.0 - p_ck0;
  const double a1 = busy * (1.0 - std::pow(1.0 - lambda * t_s, n));
  const double ak = busy * (1.0 - std::pow(1.0 - lambda * k * t_s, n));
  const double half = (a1 + 1.0 + bk1) / 2.0;
  const double cross = busy > 0.0 ? b1 * (ak - a1) / busy : 0.0;
  const double disc = half * half + cross - (a1 + 1.0) * bk1;
  return std::sqrt(std::max(disc, 0.0)) + half - 1.0;
}

SteadyState analyze_point(int n, double lambda, double t_s, int k, int m, double t_difs,
                          CollisionOptions opt) {
  SteadyState s;
  s.delay = solve_delay_system(n, lambda, t_s, k, m, t_difs);
  try {
    s.cs_bounds = approx_cs(n, lambda, t_s, k, m);
  } catch (const saturation_error&) {
    s.saturated = true;
  }
  if (s.delay.saturated) {
    s.saturated = true;
    return s;
  }
  s.collision = collision_probability_numeric(n, lambda, t_s, k, m, t_difs, opt);
  s.saturated = s.saturated || s.collision.saturated;
  s.p_col_ub = collision_upper_bound(n, lambda, t_s, k, s.delay.p_ck0);
  const double ns = s.collision.converged ? s.collision.n_s : 1.0;
  const double p0 = s.collision.converged ? s.collision.p_ck0 : 0.0;
  s.n_sat = saturation_threshold(lambda, t_s, k, m, ns, p0);
  return s;
}

}  // namespace cidc
