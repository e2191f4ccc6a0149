#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "opdyn/model.hpp"
#include "opdyn/rng.hpp"
#include "opdyn/stats.hpp"

namespace opdyn {

// ---------------------------------------------------------------------------
// Supermartingale certificate
// ---------------------------------------------------------------------------

// phi(c) = 2 c^{ln rho_minus} + c^{ln rho_plus} - 3. phi(1) = 0 and phi has a
// single interior root in (0,1); between the root and 1 it is strictly
// negative, which is what certifies c as usable.
inline double certificate_phi(double c, const ModelParams& p) {
  if (!(c > 0.0)) throw std::invalid_argument("certificate_phi: c must be positive");
  if (!(p.mu_plus > 0.0)) throw std::invalid_argument("certificate_phi: needs mu_plus > 0");
  return 2.0 * std::pow(c, std::log(p.rho_minus)) + std::pow(c, std::log(p.rho_plus)) - 3.0;
}

// phi extended by continuity to c = 1 (phi(1) = 0); keeps the degenerate
// martingale case c0 = 1 usable.
inline double certificate_phi_or_zero(double c, const ModelParams& p) {
  return c == 1.0 ? 0.0 : certificate_phi(c, p);
}

struct Certificate {
  double c0;            // chosen constant, root + tol
  double phi_at_c0;     // certificate value, strictly negative
  double escape_bound;  // 1 - c0^{ln 2}
};

// Bisection for the interior root c* of phi on (0,1); returns c0 = c* + tol,
// the admissible choice (phi(c0) < 0) with the largest escape bound up to tol.
inline Certificate find_certificate(const ModelParams& p, double tol = 1e-9) {
  if (!(p.mu_plus > 0.0)) throw std::invalid_argument("find_certificate: needs mu_plus > 0");
  if (!(tol > 0.0)) throw std::invalid_argument("find_certificate: tol must be positive");
  double lo = 1e-3;
  double hi = std::exp(-0.5);
  if (!(certificate_phi(lo, p) > 0.0) || !(certificate_phi(hi, p) < 0.0))
    throw std::runtime_error("find_certificate: bracket failed");
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    (certificate_phi(mid, p) > 0.0 ? lo : hi) = mid;
  }
  double c0 = 0.5 * (lo + hi) + tol;
  while (!(certificate_phi(c0, p) < 0.0) && c0 < 1.0) c0 += tol;  // guard, fp slack near the root
  Certificate cert{c0, certificate_phi(c0, p), 1.0 - std::pow(c0, std::log(2.0))};
  if (!(cert.phi_at_c0 < 0.0) || !(cert.escape_bound > 0.0) || !(cert.escape_bound < 1.0))
    throw std::runtime_error("find_certificate: invalid certificate");
  return cert;
}

// ---------------------------------------------------------------------------
// Dominated multiplicative walk (x rho_minus at rate 2, x rho_plus at rate 1)
// ---------------------------------------------------------------------------

struct WalkTrajectory {
  std::vector<double> times;       // starts at 0
  std::vector<double> log_values;  // log state, same length
};

// Exact jump-chain simulation: total rate 3, factor rho_minus with
// probability 2/3 and rho_plus with probability 1/3, exponential(3) holding
// times. The state is tracked in logs so long horizons cannot overflow.
inline WalkTrajectory simulate_dominated_walk(double x0, const ModelParams& p, double t_max,
                                              Rng& rng) {
  if (!(x0 > 0.0)) throw std::invalid_argument("simulate_dominated_walk: x0 must be positive");
  const double down = std::log(p.rho_minus);
  const double up = std::log(p.rho_plus);
  WalkTrajectory traj;
  double t = 0.0;
  double lx = std::log(x0);
  traj.times.push_back(t);
  traj.log_values.push_back(lx);
  for (;;) {
    t += rng.exponential(3.0);
    if (t > t_max) break;
    lx += rng.u01() < 2.0 / 3.0 ? down : up;
    traj.times.push_back(t);
    traj.log_values.push_back(lx);
  }
  return traj;
}

// Log state at t_max only (cheap variant for drift estimates).
inline double walk_log_endpoint(double log_x0, const ModelParams& p, double t_max, Rng& rng) {
  const double down = std::log(p.rho_minus);
  const double up = std::log(p.rho_plus);
  double t = 0.0;
  double lx = log_x0;
  for (;;) {
    t += rng.exponential(3.0);
    if (t > t_max) break;
    lx += rng.u01() < 2.0 / 3.0 ? down : up;
  }
  return lx;
}

// Expected drift of the log state per unit time.
inline double walk_log_drift(const ModelParams& p) {
  return 2.0 * std::log(p.rho_minus) + std::log(p.rho_plus);
}

struct EscapeEstimate {
  long long replicas = 0;
  long long escaped = 0;
  double estimate = 0.0;
  double std_error = 0.0;
  WilsonInterval ci;
  double analytic_bound = 0.0;  // 1 - c0^{ln 2} from the certificate
};

// Fraction of walks started at x0_over_d * D that reach n_over_d * D before
// falling to D, with binomial error bars and the certificate bound for
// comparison. Which barrier is hit depends only on the embedded jump chain,
// so holding times are not drawn.
inline EscapeEstimate escape_probability_mc(const ModelParams& p, double x0_over_d,
                                            double n_over_d, long long replicas, Rng& rng,
                                            double certificate_tol = 1e-9) {
  if (!p.divergence_constants_defined)
    throw std::invalid_argument("escape_probability_mc: needs mu_plus > 0");
  if (!(x0_over_d > 2.0))
    throw std::invalid_argument("escape_probability_mc: start must exceed twice the dominance gap");
  if (!(n_over_d >= x0_over_d))
    throw std::invalid_argument("escape_probability_mc: upper barrier below the start");
  if (replicas < 1) throw std::invalid_argument("escape_probability_mc: needs replicas >= 1");

  const double start = std::log(x0_over_d);  // log(X/D); failure barrier at 0
  const double goal = std::log(n_over_d);
  const double down = std::log(p.rho_minus);
  const double up = std::log(p.rho_plus);

  EscapeEstimate est;
  est.replicas = replicas;
  for (long long r = 0; r < replicas; ++r) {
    double w = start;
    while (w > 0.0 && w < goal) w += rng.u01() < 2.0 / 3.0 ? down : up;
    if (w >= goal) ++est.escaped;
  }
  est.estimate = static_cast<double>(est.escaped) / static_cast<double>(replicas);
  est.std_error =
      std::sqrt(est.estimate * (1.0 - est.estimate) / static_cast<double>(replicas));
  est.ci = wilson_interval(est.escaped, replicas);
  est.analytic_bound = find_certificate(p, certificate_tol).escape_bound;
  return est;
}

struct SupermartingaleReport {
  // One-jump identity: E[Y'/Y] over a single jump equals (phi(c0)+3)/3.
  double one_jump_expected = 0.0;
  double one_jump_direct = 0.0;
  double identity_error = 0.0;
  // Monte-Carlo E[Y_t] on a time grid, with paired consecutive differences.
  std::vector<double> grid_times;
  std::vector<double> mean_y;
  std::vector<double> sem_y;
  std::vector<double> diff_mean;  // mean of Y_{t_{j+1}} - Y_{t_j}, paired
  std::vector<double> diff_sem;
  bool nonincreasing_within_3sigma = true;
  long long replicas = 0;
};

// Checks the certificate transform Y = c0^{log X} = X^{ln c0} both ways: the
// exact one-jump expectation and the Monte-Carlo decay of E[Y_t]. c0 = 1
// (Y identically 1) is allowed as the degenerate martingale case.
inline SupermartingaleReport check_supermartingale(const ModelParams& p, double c0,
                                                   long long replicas, double horizon,
                                                   int grid_points, Rng& rng) {
  if (!(c0 > 0.0) || !(c0 <= 1.0))
    throw std::invalid_argument("check_supermartingale: c0 must be in (0,1]");
  if (c0 < 1.0 && !(certificate_phi(c0, p) < 0.0))
    throw std::invalid_argument("check_supermartingale: phi(c0) must be negative");

  const double expo = std::log(c0);  // Y = X^expo
  SupermartingaleReport rep;
  rep.one_jump_expected = (certificate_phi_or_zero(c0, p) + 3.0) / 3.0;
  rep.one_jump_direct =
      (2.0 * std::pow(p.rho_minus, expo) + std::pow(p.rho_plus, expo)) / 3.0;
  rep.identity_error = std::abs(rep.one_jump_expected - rep.one_jump_direct);
  rep.replicas = replicas;
  if (replicas <= 0 || grid_points < 1) return rep;

  const double down = std::log(p.rho_minus);
  const double up = std::log(p.rho_plus);
  const int g = grid_points;
  std::vector<MeanVar> y_acc(static_cast<std::size_t>(g) + 1);
  std::vector<MeanVar> d_acc(static_cast<std::size_t>(g));
  std::vector<double> y(static_cast<std::size_t>(g) + 1);
  rep.grid_times.resize(static_cast<std::size_t>(g) + 1);
  for (int j = 0; j <= g; ++j)
    rep.grid_times[static_cast<std::size_t>(j)] = horizon * j / static_cast<double>(g);

  for (long long r = 0; r < replicas; ++r) {
    double t = 0.0;
    double lx = 0.0;  // X starts at 1
    int j = 0;
    for (;;) {
      const double t_next = t + rng.exponential(3.0);
      while (j <= g && rep.grid_times[static_cast<std::size_t>(j)] < t_next) {
        y[static_cast<std::size_t>(j)] = std::exp(expo * lx);
        ++j;
      }
      if (j > g || t_next > horizon) break;
      t = t_next;
      lx += rng.u01() < 2.0 / 3.0 ? down : up;
    }
    while (j <= g) {
      y[static_cast<std::size_t>(j)] = std::exp(expo * lx);
      ++j;
    }
    for (int k = 0; k <= g; ++k) y_acc[static_cast<std::size_t>(k)].add(y[static_cast<std::size_t>(k)]);
    for (int k = 0; k < g; ++k)
      d_acc[static_cast<std::size_t>(k)].add(y[static_cast<std::size_t>(k) + 1] -
                                             y[static_cast<std::size_t>(k)]);
  }

  for (int k = 0; k <= g; ++k) {
    rep.mean_y.push_back(y_acc[static_cast<std::size_t>(k)].mean);
    rep.sem_y.push_back(y_acc[static_cast<std::size_t>(k)].sem());
  }
  for (int k = 0; k < g; ++k) {
    rep.diff_mean.push_back(d_acc[static_cast<std::size_t>(k)].mean);
    rep.diff_sem.push_back(d_acc[static_cast<std::size_t>(k)].sem());
    if (rep.diff_mean.back() > 3.0 * rep.diff_sem.back())
      rep.nonincreasing_within_3sigma = false;
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Gap geometry oracles
// ---------------------------------------------------------------------------

// Analytic lower bound for the chance that, in a fresh uniform configuration,
// a given edge carries a gap above theta while both flanking edges stay
// below it: (1/2 - theta/4)^2 (theta/4)^2.
inline double straddle_probability_bound(double theta) {
  if (!(theta > 0.0) || !(theta < 2.0))
    throw std::invalid_argument("straddle_probability_bound: needs 0 < theta < 2");
  const double f1 = 0.5 - theta / 4.0;
  const double f2 = theta / 4.0;
  return f1 * f1 * f2 * f2;
}

struct McEstimate {
  long long samples = 0;
  long long hits = 0;
  double estimate = 0.0;
  double std_error = 0.0;
};

// Direct sampling of the straddle event itself from i.i.d. uniform 4-tuples.
inline McEstimate straddle_probability_mc(double theta, long long samples, Rng& rng) {
  McEstimate est;
  est.samples = samples;
  for (long long i = 0; i < samples; ++i) {
    const double x1 = rng.uniform(-1.0, 1.0);
    const double x2 = rng.uniform(-1.0, 1.0);
    const double x3 = rng.uniform(-1.0, 1.0);
    const double x4 = rng.uniform(-1.0, 1.0);
    if (std::abs(x2 - x1) < theta && std::abs(x3 - x2) > theta && std::abs(x4 - x3) < theta)
      ++est.hits;
  }
  est.estimate = static_cast<double>(est.hits) / static_cast<double>(samples);
  est.std_error = std::sqrt(est.estimate * (1.0 - est.estimate) / static_cast<double>(samples));
  return est;
}

// True iff a gap g survives the worst one-event attraction loss mu_minus *
// theta with at least the ratio rho_minus, i.e. g - mu_minus*theta >
// rho_minus*g. Algebraically that is exactly g > dominance_gap, which is how
// it is evaluated (the subtractive form can round the wrong way at the
// boundary g == dominance_gap).
inline bool gap_above_dominance(double g, const ModelParams& p) {
  if (!p.divergence_constants_defined)
    throw std::invalid_argument("gap_above_dominance: needs mu_plus > 0");
  return g > p.dominance_gap;
}

struct AlignResult {
  double b_prime;
  double c_prime;
  double ratio;  // (|a-b'| v |b'-c'|) / |a-b|
};

// Repulsion applied to the lower pair of three ordered opinions a > b > c;
// the ratio of the larger resulting gap to the original upper gap is at
// least rho_minus, with equality exactly when a-b = (1+3 mu_plus)(b-c).
inline AlignResult align_transform(double a, double b, double c, double mu_plus) {
  if (!(a > b && b > c)) throw std::invalid_argument("align_transform: requires a > b > c");
  if (!(mu_plus > 0.0)) throw std::invalid_argument("align_transform: requires mu_plus > 0");
  const double bp = b - mu_plus * (c - b);
  const double cp = c - mu_plus * (b - c);
  const double ratio = std::max(std::abs(a - bp), std::abs(bp - cp)) / (a - b);
  return {bp, cp, ratio};
}

enum class EventSide { left, right };

// Window-control instance: four consecutive opinions with the watched edge
// in the middle and an interaction on its left or right neighbor edge.
// Applies the interaction and reports whether the largest of the three
// post-event gaps keeps the rho_minus ratio to the old middle gap. Requires
// the pre-event middle gap to exceed the dominance level.
inline bool window_control_holds(std::array<double, 4> sites, EventSide side,
                                 const ModelParams& p, double rel_tol = 1e-12) {
  if (!p.divergence_constants_defined)
    throw std::invalid_argument("window_control_holds: needs mu_plus > 0");
  const double pre_gap = std::abs(sites[2] - sites[1]);
  if (!(pre_gap > p.dominance_gap))
    throw std::invalid_argument("window_control_holds: pre-event gap must exceed dominance gap");
  if (side == EventSide::right) {
    const InteractionOutcome o = interact(sites[2], sites[3], p);
    sites[2] = o.new_left;
    sites[3] = o.new_right;
  } else {
    const InteractionOutcome o = interact(sites[0], sites[1], p);
    sites[0] = o.new_left;
    sites[1] = o.new_right;
  }
  const double g0 = std::abs(sites[1] - sites[0]);
  const double g1 = std::abs(sites[2] - sites[1]);
  const double g2 = std::abs(sites[3] - sites[2]);
  const double window_max = std::max({g0, g1, g2});
  const double scale = std::max({pre_gap, std::abs(sites[0]), std::abs(sites[1]),
                                 std::abs(sites[2]), std::abs(sites[3]), 1.0});
  return window_max >= p.rho_minus * pre_gap - rel_tol * scale;
}

// Log of the combined analytic lower bound on the probability that a tracked
// gap diverges: straddle bound x e^{-5}/K! x escape bound. Kept in logs
// because K! overwhelms double range once the kick count reaches the
// hundreds (small mu_plus).
inline double divergence_probability_log_bound(const ModelParams& p,
                                               double certificate_tol = 1e-9) {
  if (!p.divergence_constants_defined)
    throw std::invalid_argument("divergence_probability_bound: needs mu_plus > 0");
  return std::log(straddle_probability_bound(p.theta)) - 5.0 -
         std::lgamma(static_cast<double>(p.kick_count) + 1.0) +
         std::log(find_certificate(p, certificate_tol).escape_bound);
}

// Plain-value form; underflows to 0 when the kick count is extreme, in which
// case the log form above is the usable quantity.
inline double divergence_probability_bound(const ModelParams& p, double certificate_tol = 1e-9) {
  return std::exp(divergence_probability_log_bound(p, certificate_tol));
}

}  // namespace opdyn
