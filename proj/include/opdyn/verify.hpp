#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "opdyn/analysis.hpp"
#include "opdyn/simulation.hpp"

namespace opdyn {

// ---------------------------------------------------------------------------
// Deterministic kick sequence
// ---------------------------------------------------------------------------

struct ForcedIncreaseReport {
  int kicks = 0;
  double initial_gap = 0.0;
  double final_gap = 0.0;
  double two_dominance = 0.0;
  double theta_rho_pow_k = 0.0;
  bool tracker_stayed = false;
  bool pass = false;
};

// Builds a six-site segment whose middle edge straddles theta (flanking gaps
// below, middle gap just above), then applies exactly kick_count repulsions
// on the middle edge and none anywhere else. The tracked process must sit
// still while the gap climbs past both theta*rho_plus^K and twice the
// dominance gap. A deterministic replay of the event inclusion that the
// probabilistic estimate builds on.
inline ForcedIncreaseReport run_forced_increase(const ModelParams& p) {
  if (!p.divergence_constants_defined)
    throw std::invalid_argument("run_forced_increase: needs mu_plus > 0");
  const double th = p.theta;
  OpinionLattice lat({0.4 * th, 0.4 * th, 0.505 * th, -0.505 * th, -0.4 * th, -0.4 * th},
                     Boundary::segment);
  const int e = 2;  // middle edge of the 5-edge segment
  TrackerSet tracker({e}, lat, 1);

  ForcedIncreaseReport rep;
  rep.kicks = p.kick_count;
  rep.initial_gap = lat.gap(e);
  rep.two_dominance = 2.0 * p.dominance_gap;
  rep.theta_rho_pow_k = th * std::pow(p.rho_plus, p.kick_count);
  rep.tracker_stayed = true;

  for (int j = 0; j < p.kick_count; ++j) {
    const double t = static_cast<double>(j + 1) / static_cast<double>(p.kick_count + 1);
    lat.apply(e, lat.interact_on(e, p));
    tracker.on_event({t, e}, lat);
    if (tracker.position(tracker.root_of(0)) != e) rep.tracker_stayed = false;
  }
  rep.final_gap = lat.gap(e);
  rep.pass = rep.tracker_stayed && rep.final_gap > rep.two_dominance &&
             rep.final_gap > rep.theta_rho_pow_k;
  return rep;
}

// ---------------------------------------------------------------------------
// Oracle suite
// ---------------------------------------------------------------------------

struct CheckResult {
  std::string name;
  bool pass = false;
  long long samples = 0;
  double worst_margin = 0.0;  // smallest observed slack; negative means failed
  std::string note;
};

struct VerifySuite {
  std::vector<CheckResult> checks;
  bool all_pass = true;

  void add(CheckResult c) {
    all_pass = all_pass && c.pass;
    checks.push_back(std::move(c));
  }
};

namespace verify_detail {

inline CheckResult interaction_exactness(const ModelParams& base, long long n, Rng& rng) {
  CheckResult c{"interaction_exactness", true, n, 1e300, ""};
  double worst = 0.0;
  for (long long i = 0; i < n; ++i) {
    const double theta = rng.uniform(0.05, 1.95);
    const double mm = rng.uniform(0.01, 0.5);
    const double mp = rng.uniform(0.0, 0.5);
    const ModelParams p = ModelParams::validated(theta, mm, mp);
    const double a = rng.uniform(-10.0, 10.0);
    const double b = rng.uniform(-10.0, 10.0);
    const InteractionOutcome o = interact(a, b, p);
    const double scale = std::abs(a) + std::abs(b) + 1.0;
    const double sum_err = std::abs(o.new_left + o.new_right - (a + b)) / scale;
    const double mult = o.branch == Branch::attraction ? 1.0 - 2.0 * mm : 1.0 + 2.0 * mp;
    const double gap_err =
        std::abs(std::abs(o.new_left - o.new_right) - mult * std::abs(a - b)) / scale;
    worst = std::max({worst, sum_err, gap_err});
  }
  (void)base;
  c.worst_margin = 1e-12 - worst;
  c.pass = c.worst_margin >= 0.0;
  c.note = "worst relative error " + std::to_string(worst);
  return c;
}

inline CheckResult straddle_bound(const ModelParams& p, long long n, Rng& rng) {
  const McEstimate est = straddle_probability_mc(p.theta, n, rng);
  const double bound = straddle_probability_bound(p.theta);
  CheckResult c{"straddle_bound_mc", false, n, 0.0, ""};
  c.worst_margin = est.estimate - (bound - 3.0 * est.std_error);
  c.pass = c.worst_margin >= 0.0;
  c.note = "estimate " + std::to_string(est.estimate) + " vs bound " + std::to_string(bound);
  return c;
}

inline CheckResult align_ratio(const ModelParams& base, int grid, Rng&) {
  CheckResult c{"align_ratio", true, 0, 1e300, ""};
  for (double mu : {0.05, 0.1, 0.25, 0.5}) {
    const double rho = (1.0 + 2.0 * mu) / (1.0 + 3.0 * mu);
    for (int i = 0; i < grid; ++i) {
      const double s = std::pow(10.0, -3.0 + 6.0 * i / (grid - 1.0));
      for (int j = 0; j < grid; ++j) {
        const double r = std::pow(10.0, -3.0 + 6.0 * j / (grid - 1.0));
        const double ratio = align_transform(r + s, r, 0.0, mu).ratio;
        c.worst_margin = std::min(c.worst_margin, ratio - (rho - 1e-12));
        ++c.samples;
      }
      const double r_eq = s / (1.0 + 3.0 * mu);
      const double eq_err = std::abs(align_transform(r_eq + s, r_eq, 0.0, mu).ratio - rho);
      c.worst_margin = std::min(c.worst_margin, 1e-9 - eq_err);
      ++c.samples;
    }
  }
  (void)base;
  c.pass = c.worst_margin >= 0.0;
  return c;
}

inline CheckResult window_control(const ModelParams& p, long long per_case, Rng& rng) {
  CheckResult c{"window_control", true, 0, 1e300, ""};
  const double d = p.dominance_gap;
  const double th = p.theta;
  long long failures = 0;
  for (int kase = 0; kase < 4; ++kase) {
    for (long long i = 0; i < per_case; ++i) {
      const double g = d * (1.0 + 99.0 * rng.u01());
      const double b = rng.uniform(-5.0 * d, 5.0 * d);
      const double a = b + g;
      double cc;
      switch (kase) {
        case 0: cc = b + th + rng.uniform(0.0, 10.0 * th) + 1e-12; break;
        case 1: cc = b + rng.uniform(0.0, th); break;
        case 2: cc = b - rng.uniform(0.0, th); break;
        default: cc = b - th - rng.uniform(0.0, 10.0 * th) - 1e-12; break;
      }
      const double z = a + rng.uniform(-2.0 * th, 2.0 * th);
      const bool mirror = rng.bernoulli(0.5);
      const bool ok = mirror ? window_control_holds({cc, b, a, z}, EventSide::left, p)
                             : window_control_holds({z, a, b, cc}, EventSide::right, p);
      if (!ok) ++failures;
      ++c.samples;
    }
  }
  c.worst_margin = failures == 0 ? 0.0 : -static_cast<double>(failures);
  c.pass = failures == 0;
  c.note = std::to_string(failures) + " failures";
  return c;
}

inline CheckResult kick_sequence(const ModelParams& p) {
  const ForcedIncreaseReport rep = run_forced_increase(p);
  CheckResult c{"kick_sequence", rep.pass, p.kick_count, rep.final_gap - rep.two_dominance, ""};
  c.note = "final gap " + std::to_string(rep.final_gap) + " vs 2D " +
           std::to_string(rep.two_dominance);
  return c;
}

inline CheckResult certificate_family(const ModelParams& base) {
  CheckResult c{"certificate", true, 0, 1e300, ""};
  for (double mu : {0.01, 0.1, 0.25, 0.5}) {
    const ModelParams p = ModelParams::validated(base.theta, base.mu_minus, mu);
    const Certificate cert = find_certificate(p);
    c.worst_margin = std::min(c.worst_margin, -cert.phi_at_c0);
    const double drift_ok = p.rho_minus * p.rho_minus * p.rho_plus - 1.0;
    c.worst_margin = std::min(c.worst_margin, drift_ok);
    c.pass = c.pass && cert.phi_at_c0 < 0.0 && drift_ok > 0.0 && cert.escape_bound > 0.0 &&
             cert.escape_bound < 1.0;
    ++c.samples;
  }
  return c;
}

inline CheckResult one_jump_identity(const ModelParams& p, Rng& rng) {
  CheckResult c{"one_jump_identity", true, 2, 1e300, ""};
  const Certificate cert = find_certificate(p);
  for (double c0 : {cert.c0, 0.5}) {
    const SupermartingaleReport rep = check_supermartingale(p, c0, 0, 0.0, 0, rng);
    c.worst_margin = std::min(c.worst_margin, 1e-12 - rep.identity_error);
  }
  c.pass = c.worst_margin >= 0.0;
  return c;
}

inline CheckResult supermartingale_mc(const ModelParams& p, long long replicas, Rng& rng) {
  const SupermartingaleReport rep = check_supermartingale(p, 0.5, replicas, 50.0, 10, rng);
  CheckResult c{"supermartingale_mc", rep.nonincreasing_within_3sigma, replicas, 1e300, ""};
  for (std::size_t k = 0; k < rep.diff_mean.size(); ++k)
    c.worst_margin = std::min(c.worst_margin, 3.0 * rep.diff_sem[k] - rep.diff_mean[k]);
  c.note = "E[Y] start " + std::to_string(rep.mean_y.front()) + " end " +
           std::to_string(rep.mean_y.back());
  return c;
}

inline CheckResult escape_bound(const ModelParams& p, long long replicas, Rng& rng) {
  const EscapeEstimate est = escape_probability_mc(p, 2.001, 1000.0, replicas, rng);
  CheckResult c{"escape_bound_mc", false, replicas, 0.0, ""};
  c.worst_margin = est.estimate - (est.analytic_bound - 3.0 * est.std_error);
  c.pass = c.worst_margin >= 0.0;
  c.note = "estimate " + std::to_string(est.estimate) + " vs bound " +
           std::to_string(est.analytic_bound);
  return c;
}

inline CheckResult walk_drift(const ModelParams& p, long long replicas, Rng& rng) {
  MeanVar acc;
  const double t_max = 50.0;
  for (long long r = 0; r < replicas; ++r) acc.add(walk_log_endpoint(0.0, p, t_max, rng));
  const double slope = acc.mean / t_max;
  const double expected = walk_log_drift(p);
  CheckResult c{"walk_drift", false, replicas, 0.0, ""};
  const double rel = std::abs(slope - expected) / expected;
  // 2% gate at acceptance-grade counts; the 3-sigma floor keeps reduced-scale
  // runs meaningful (at 1e5 replicas it is far tighter than the 2%)
  const double sigma_floor = 3.0 * acc.sem() / t_max / expected;
  c.worst_margin = std::max(0.02, sigma_floor) - rel;
  c.pass = c.worst_margin >= 0.0;
  c.note = "slope " + std::to_string(slope) + " vs " + std::to_string(expected);
  return c;
}

inline CheckResult divergence_bound(const ModelParams& p) {
  const double log_bound = divergence_probability_log_bound(p);
  const double bound = divergence_probability_bound(p);
  CheckResult c{"divergence_bound_positive", std::isfinite(log_bound), 1, bound, ""};
  c.note = "bound " + std::to_string(bound) + " (log " + std::to_string(log_bound) + ")";
  return c;
}

}  // namespace verify_detail

// Runs the full oracle suite for the given parameters. scale multiplies the
// sample counts (1.0 reproduces the acceptance-grade counts).
inline VerifySuite run_verification(const ModelParams& p, std::uint64_t seed,
                                    double scale = 1.0) {
  if (!p.divergence_constants_defined)
    throw std::invalid_argument("run_verification: needs mu_plus > 0");
  const auto scaled = [scale](long long n) {
    return std::max<long long>(100, static_cast<long long>(n * scale));
  };
  Rng rng(splitmix64(seed) ^ 0x5eedf00dULL);
  VerifySuite suite;
  suite.add(verify_detail::interaction_exactness(p, scaled(1000000), rng));
  suite.add(verify_detail::straddle_bound(p, scaled(10000000), rng));
  suite.add(verify_detail::align_ratio(p, scale >= 1.0 ? 1000 : 100, rng));
  suite.add(verify_detail::window_control(p, scaled(100000), rng));
  suite.add(verify_detail::kick_sequence(p));
  suite.add(verify_detail::certificate_family(p));
  suite.add(verify_detail::one_jump_identity(p, rng));
  suite.add(verify_detail::supermartingale_mc(p, scaled(100000), rng));
  suite.add(verify_detail::escape_bound(p, scaled(100000), rng));
  suite.add(verify_detail::walk_drift(p, scaled(100000), rng));
  suite.add(verify_detail::divergence_bound(p));
  return suite;
}

}  // namespace opdyn
