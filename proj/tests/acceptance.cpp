// Acceptance suite: runs every gate of the toolkit at full sample counts and
// prints one PASS/FAIL line per criterion. Exit code 0 only if all pass.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "opdyn/harness.hpp"

using namespace opdyn;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

int g_failures = 0;

void run_criterion(int id, const std::string& name, const std::function<Outcome()>& body) {
  const auto start = std::chrono::steady_clock::now();
  Outcome out;
  try {
    out = body();
  } catch (const std::exception& e) {
    out.pass = false;
    out.detail = std::string("exception: ") + e.what();
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (!out.pass) ++g_failures;
  std::printf("[%s] %02d %-28s %s (%.2f s)\n", out.pass ? "PASS" : "FAIL", id, name.c_str(),
              out.detail.c_str(), secs);
  std::fflush(stdout);
}

std::string fmt(double v) {
  std::ostringstream ss;
  ss << v;
  return ss.str();
}

const ModelParams kCanonical = ModelParams::validated(1.0, 0.5, 0.25);

}  // namespace

int main() {
  std::printf("acceptance suite: canonical parameters theta=1 mu-=0.5 mu+=0.25\n");

  // 1. exact pair-sum conservation and branch-conditional gap multipliers
  run_criterion(1, "interaction-exactness", [] {
    Rng rng(1001);
    const CheckResult c = verify_detail::interaction_exactness(kCanonical, 1000000, rng);
    return Outcome{c.pass, "1e6 samples, " + c.note + ", tol 1e-12"};
  });

  // 2. straddle event probability vs its analytic lower bound
  run_criterion(2, "initial-straddle-bound", [] {
    Rng rng(1002);
    const McEstimate est = straddle_probability_mc(1.0, 10000000, rng);
    const double bound = straddle_probability_bound(1.0);
    const bool pass = est.estimate >= bound - 3.0 * est.std_error;
    return Outcome{pass, "estimate " + fmt(est.estimate) + " >= 1/256 - 3s (bound " +
                             fmt(bound) + ")"};
  });

  // 3. lower-pair repulsion ratio over a grid, with the equality locus
  run_criterion(3, "align-ratio-grid", [] {
    Rng rng(1003);
    const CheckResult c = verify_detail::align_ratio(kCanonical, 1000, rng);
    return Outcome{c.pass,
                   fmt(static_cast<double>(c.samples)) + " points, worst margin " +
                       fmt(c.worst_margin)};
  });

  // 4. window control across the four interaction cases
  run_criterion(4, "window-control-cases", [] {
    Rng rng(1004);
    const CheckResult c = verify_detail::window_control(kCanonical, 100000, rng);
    return Outcome{c.pass, "4 x 1e5 randomized instances, " + c.note};
  });

  // 5. deterministic kick sequence
  run_criterion(5, "forced-gap-increase", [] {
    const ForcedIncreaseReport rep = run_forced_increase(kCanonical);
    const bool pass = rep.pass && rep.kicks == 5 && rep.final_gap > 7.0;
    return Outcome{pass, "final gap " + fmt(rep.final_gap) + " > 2D = 7, tracker fixed: " +
                             (rep.tracker_stayed ? "yes" : "no")};
  });

  // 6. certificate family, exact one-jump identity, Monte-Carlo decay
  run_criterion(6, "supermartingale-certificate", [] {
    Rng rng(1006);
    bool pass = true;
    std::string detail;
    for (double mu : {0.01, 0.1, 0.25, 0.5}) {
      const ModelParams p = ModelParams::validated(1.0, 0.5, mu);
      const Certificate cert = find_certificate(p);
      pass = pass && cert.phi_at_c0 < 0.0;
      const SupermartingaleReport one = check_supermartingale(p, cert.c0, 0, 0.0, 0, rng);
      const SupermartingaleReport half = check_supermartingale(p, 0.5, 0, 0.0, 0, rng);
      pass = pass && one.identity_error <= 1e-12 && half.identity_error <= 1e-12;
    }
    const SupermartingaleReport mc = check_supermartingale(kCanonical, 0.5, 100000, 50.0, 10, rng);
    pass = pass && mc.nonincreasing_within_3sigma;
    detail = "phi(c0)<0 for 4 mu values, identity <= 1e-12, E[Y] " + fmt(mc.mean_y.front()) +
             " -> " + fmt(mc.mean_y.back()) + " nonincreasing";
    return Outcome{pass, detail};
  });

  // 7. optional-stopping escape bound
  run_criterion(7, "escape-probability-bound", [] {
    Rng rng(1007);
    const EscapeEstimate est = escape_probability_mc(kCanonical, 2.001, 1000.0, 100000, rng);
    const bool pass = est.estimate >= est.analytic_bound - 3.0 * est.std_error;
    return Outcome{pass, "estimate " + fmt(est.estimate) + " vs bound " +
                             fmt(est.analytic_bound) + " - 3s over 1e5 replicas"};
  });

  // 8. log drift of the dominated walk
  run_criterion(8, "walk-drift", [] {
    Rng rng(1008);
    MeanVar acc;
    const double t_max = 50.0;
    for (int r = 0; r < 100000; ++r) acc.add(walk_log_endpoint(0.0, kCanonical, t_max, rng));
    const double slope = acc.mean / t_max;
    const double expected = walk_log_drift(kCanonical);
    const double rel = std::abs(slope - expected) / expected;
    return Outcome{rel <= 0.02, "slope " + fmt(slope) + " vs " + fmt(expected) +
                                    " (rel err " + fmt(rel) + ", tol 2%)"};
  });

  // 9. lattice divergence at desk scale with live invariant checks
  run_criterion(9, "lattice-divergence", [] {
    ExperimentConfig cfg;
    cfg.sites = 1000;
    cfg.t_max = 200.0;
    cfg.replicas = 100;
    cfg.seed = 9;
    cfg.thresholds = {10000.0};
    cfg.sample_dt = 10.0;
    const SimulateOutput out = run_simulate(cfg);  // throws on invariant violation
    const int witnesses = out.replicas_with_top_threshold_witness;
    const double drift = out.summary["results"]["conservation_drift_max"].get<double>();
    const bool pass = witnesses > 0 && drift <= 1e-9;
    return Outcome{pass, fmt(witnesses) + "/100 seeds with a tracked gap above 1e4; "
                             "domination assertion never fired; drift " +
                             fmt(drift)};
  });

  // 10. classic-limit sanity at mu_plus = 0
  run_criterion(10, "classic-limit", [] {
    // consensus regime
    const ModelParams consensus = ModelParams::validated(1.5, 0.5, 0.0);
    Rng init_a(replica_seed(10, 0));
    SimulationOptions opt;
    opt.t_max = 1000.0;
    opt.sample_dt = 50.0;
    LatticeSimulation sim_a(consensus, OpinionLattice::random_uniform(10000, Boundary::ring, init_a),
                            Rng(replica_seed(10, 1)), opt);
    sim_a.run();
    const double frac_a = sim_a.gap_fraction_above(0.01);

    // discordance regime
    const ModelParams discord = ModelParams::validated(0.5, 0.5, 0.0);
    Rng init_b(replica_seed(10, 2));
    LatticeSimulation sim_b(discord, OpinionLattice::random_uniform(10000, Boundary::ring, init_b),
                            Rng(replica_seed(10, 3)), opt);
    const SimulationResult res_b = sim_b.run();
    const double frac_b = sim_b.gap_fraction_above(0.5);
    bool stable = frac_b > 0.01;
    for (const SeriesRow& row : res_b.series)
      if (row.t >= 750.0) stable = stable && row.gaps_above_theta > 100;  // > 1% of 1e4 edges

    const bool pass = frac_a < 0.05 && stable;
    return Outcome{pass, "theta=1.5: frac(gap>0.01) = " + fmt(frac_a) +
                             " < 5%; theta=0.5: frac(gap>theta) = " + fmt(frac_b) + " > 1%"};
  });

  // 11. mean-field escalation: algebra, seeded rate bound, support growth
  run_criterion(11, "meanfield-escalation", [] {
    const EscalationIntervals e = escalation_intervals(1.0, 0.25, 0.5, 0.25);
    bool pass = std::abs(e.c_plus - 1.125) < 1e-12 && std::abs(e.j_lo + 0.425) < 1e-12 &&
                std::abs(e.j_hi + 0.325) < 1e-12;
    pass = pass && check_escalation_intervals(1.0, 0.25, 0.5, 0.25, 1001);

    const double da = 0.025;
    DensityGrid g(2.0, da);
    for (int i = 0; i < g.size(); ++i) {
      const double a = g.coordinate(i);
      if ((a >= e.i_neg_lo - 1e-12 && a <= e.i_neg_hi + 1e-12) ||
          (a >= e.i_pos_lo - 1e-12 && a <= e.i_pos_hi + 1e-12))
        g[i] = 0.25;
    }
    const int ic = static_cast<int>(std::llround(e.c_plus / da)) + g.center();
    const double rate = density_rate(g, 1.0, 0.25)[static_cast<std::size_t>(ic)];
    pass = pass && rate >= e.rate_bound - 0.05 * da;

    MeanfieldOptions o;  // canonical resolution
    const MeanfieldResult res = run_meanfield(o);
    pass = pass && res.max_support_radius > 1.0 + o.theta * o.mu_plus;
    return Outcome{pass, "intervals exact; seeded rate " + fmt(rate) + " >= " +
                             fmt(e.rate_bound) + " - C*da; support radius reached " +
                             fmt(res.max_support_radius) + " > 1.25 by t=20"};
  });

  std::printf("%s: %d/11 criteria passed\n", g_failures == 0 ? "ACCEPTANCE PASSED" : "ACCEPTANCE FAILED",
              11 - g_failures);
  return g_failures == 0 ? 0 : 1;
}
