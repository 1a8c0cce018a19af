#pragma once

#include <Eigen/Dense>
#include <stdexcept>

namespace cidc {

/// Operating point past the stable regime: a queueing-style equilibrium with
/// the requested load does not exist (or a formula denominator crossed zero).
struct saturation_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Linear-algebra result failed its own residual or uniqueness check.
struct numeric_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Long-run fraction of slots holding a packet arrival, given the collision
/// overhead factor n_s and the empty-channel probability p_ck0:
/// lambda * n * t_s / ((1 - p_ck0) * (n_s - lambda * n * (k - 1) * t_s)).
/// Throws saturation_error when the denominator is not positive.
double steady_ratio(int n, double lambda, double t_s, int k, double n_s, double p_ck0);

/// Largest vehicle count the channel can carry at the packet-to-slot ratio
/// cap 1/m: n_s / (lambda * (m / (1 - p_ck0) + k - 1) * t_s).
double saturation_threshold(double lambda, double t_s, int k, int m, double n_s, double p_ck0);

/// Column-stochastic one-slot transition matrix of the contending count over
/// states {0, .., n}. Idle and busy arrival kernels are binomial over n
/// vehicles with per-vehicle probabilities lambda * t_s and
/// lambda * k * t_s; the busy column also steps down by one (success) or two
/// (collision, probability p_col). The two kernels blend with weight
/// upsilon_s on the busy side. Probability mass falling outside the state
/// range is clipped onto the boundary states and columns are renormalized.
Eigen::MatrixXd transition_matrix(int n, double lambda, double t_s, int k, double upsilon_s,
                                  double p_col);

/// Stationary distribution of a column-stochastic matrix, solved by
/// replacing one balance equation with normalization. Throws numeric_error
/// when the stationary vector is not unique (kernel dimension above one) or
/// the residual ||(P - I) p||_inf exceeds 1e-9.
Eigen::VectorXd steady_distribution(const Eigen::MatrixXd& p);

struct DelaySolution {
  double c_s = 0.0;    ///< mean packets contending alongside a tagged packet
  double d_o = 0.0;    ///< mean generation-to-transmission-end delay, seconds
  double d_c = 0.0;    ///< d_o - k * t_s + t_difs
  double p_ck0 = 0.0;  ///< empty-channel probability (1 - c_s / n)^n
  bool saturated = false;  ///< no equilibrium below c = n; other fields unset
};

/// Equilibrium of the delay system: the unique c in [0, n] where the
/// self-consistent mean delay satisfies n * lambda * d_o(c) = c. Scans in
/// steps of n / 4096 for a sign change, then bisects to 1e-12 relative
/// width. No sign change marks the point saturated.
DelaySolution solve_delay_system(int n, double lambda, double t_s, int k, int m, double t_difs);

/// Channel access delay from the transmission-end delay.
/// Throws std::invalid_argument when the result would be negative.
double contention_delay(double d_o, int k, double t_s, double t_difs);

struct CsBounds {
  double small_n = 0.0;  ///< light-crowding closed form, upper side
  double large_n = 0.0;  ///< heavy-crowding closed form, lower side
};

/// Closed-form brackets for the equilibrium contention intensity:
/// n * lambda * (k + m) * t_s and n * lambda * (k / 2 + m) * t_s, both over
/// 1 - n * lambda * (k + m - 1) * t_s. Throws saturation_error when the
/// shared denominator is not positive.
CsBounds approx_cs(int n, double lambda, double t_s, int k, int m);

struct CollisionNumeric {
  double p_col = 0.0;
  double upsilon_s = 0.0;
  double n_s = 1.0;
  double p_ck0 = 0.0;
  Eigen::VectorXd c_dist;
  bool converged = false;
  bool saturated = false;
  int iterations = 0;
};

struct CollisionOptions {
  double tol = 1e-8;
  int max_iterations = 10000;
  double damping = 0.5;
};

/// Collision probability of the coordinated policy by fixed point over
/// (p_col, n_s, upsilon_s, c_dist). Each pass recomputes the slot ratio, the
/// stationary contending-count distribution, and the pairwise alignment sum:
/// two packets collide when the counter spacing m times the net
/// transmission/arrival imbalance between their generation instants matches
/// their slot gap; the per-pair probability is summed over the stationary
/// law of the count seen at the first arrival, doubled for the symmetric
/// order. Transmission counts are binomial over the slot gap with success
/// upsilon_s; arrival counts are binomial over n with the ratio-weighted
/// mean slot length. Marks saturated (and stops) when the operating point
/// has no stable equilibrium.
CollisionNumeric collision_probability_numeric(int n, double lambda, double t_s, int k, int m,
                                               double t_difs, CollisionOptions opt = {});

/// Closed-form cap on the collision probability at equilibrium, from the
/// quadratic worst case of the alignment sum:
/// sqrt(((a_1 + 1 + b_{k-1}) / 2)^2 + b_1 (a_k - a_1) / (1 - p_ck0)
///      - (a_1 + 1) b_{k-1}) + (a_1 + 1 + b_{k-1}) / 2 - 1
/// with b_x = lambda n x t_s and a_x = (1 - p_ck0)(1 - (1 - lambda x t_s)^n).
double collision_upper_bound(int n, double lambda, double t_s, int k, double p_ck0);

/// Everything the report needs at one (n, k) grid point.
struct SteadyState {
  DelaySolution delay;
  CsBounds cs_bounds;
  double n_sat = 0.0;  ///< threshold at the numeric n_s and p_ck0
  CollisionNumeric collision;
  double p_col_ub = 0.0;
  bool saturated = false;  ///< any stage signalled saturation
};

SteadyState analyze_point(int n, double lambda, double t_s, int k, int m, double t_difs,
                          CollisionOptions opt = {});

}  // namespace cidc
