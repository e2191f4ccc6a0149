#pragma once

#include <atomic>
#include <chrono>
#include <exception>
#include <mutex>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "opdyn/config.hpp"
#include "opdyn/io.hpp"
#include "opdyn/meanfield.hpp"
#include "opdyn/simulation.hpp"
#include "opdyn/stats.hpp"
#include "opdyn/verify.hpp"

namespace opdyn {

namespace harness_detail {

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

// Runs fn(replica_index) for every replica on up to `threads` workers.
// Replicas are seeded independently, so assignment order cannot change
// results; failures are rethrown on the caller thread.
template <typename Fn>
void for_each_replica(int replicas, int threads, Fn fn) {
  if (threads <= 1 || replicas <= 1) {
    for (int r = 0; r < replicas; ++r) fn(r);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  const int n_workers = std::min(threads, replicas);
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(n_workers));
  for (int w = 0; w < n_workers; ++w) {
    pool.emplace_back([&]() {
      for (;;) {
        const int r = next.fetch_add(1);
        if (r >= replicas) return;
        try {
          fn(r);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
          return;
        }
      }
    });
  }
  for (std::thread& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace harness_detail

// ---------------------------------------------------------------------------
// simulate / track
// ---------------------------------------------------------------------------

struct SimulateOutput {
  nlohmann::json summary;
  std::vector<SeriesRow> series0;               // replica 0 time series
  std::vector<TrackerHistoryRow> history0;      // replica 0 tracker trace
  std::vector<Event> events0;                   // replica 0 events, when recorded
  int replicas_with_top_threshold_witness = 0;  // classes above the largest threshold
};

inline SimulateOutput run_simulate(const ExperimentConfig& cfg) {
  cfg.validate();
  const ModelParams p = cfg.params();
  // gaps grow exponentially in the divergent regime; double range is gone
  // long before t = 7000, so long horizons are refused up front and genuine
  // overflow still aborts with the offending time
  if (p.divergence_constants_defined && cfg.t_max > 5000.0)
    throw ConfigError("t_max above 5000 with mu_plus > 0: gaps overflow double range");
  harness_detail::Stopwatch clock;

  struct ReplicaResult {
    long long events = 0;
    double max_tracked_gap = 0.0;
    double final_max_gap = 0.0;
    std::vector<char> exceeded;
    std::vector<double> final_fracs;
    double drift = 0.0;
    int classes = 0;
  };
  std::vector<ReplicaResult> results(static_cast<std::size_t>(cfg.replicas));
  SimulateOutput out;

  std::vector<double> sorted_thresholds = cfg.thresholds;
  std::sort(sorted_thresholds.begin(), sorted_thresholds.end());

  harness_detail::for_each_replica(cfg.replicas, cfg.threads, [&](int r) {
    Rng init(replica_seed(cfg.seed, static_cast<std::uint64_t>(2 * r)));
    OpinionLattice lat = OpinionLattice::random_uniform(cfg.sites, cfg.boundary, init);
    SimulationOptions opt;
    opt.t_max = cfg.t_max;
    opt.sample_dt = cfg.sample_dt;
    opt.tracker_stride = cfg.tracker_stride;
    opt.history_stride = cfg.history_stride;
    opt.record_events = cfg.emit_events && r == 0;
    LatticeSimulation sim(p, std::move(lat),
                          Rng(replica_seed(cfg.seed, static_cast<std::uint64_t>(2 * r + 1))),
                          opt);
    SimulationResult res = sim.run();

    ReplicaResult& rr = results[static_cast<std::size_t>(r)];
    rr.events = res.events;
    rr.drift = res.conservation_drift;
    const DivergenceReport rep = sim.trackers().divergence_stats(sim.lattice(), sorted_thresholds);
    rr.classes = static_cast<int>(rep.classes.size());
    rr.exceeded.resize(rep.thresholds.size());
    for (std::size_t t = 0; t < rep.thresholds.size(); ++t)
      rr.exceeded[t] = rep.classes_exceeding[t] > 0 ? 1 : 0;
    for (const TrackerClassStats& c : rep.classes)
      rr.max_tracked_gap = std::max(rr.max_tracked_gap, c.max_gap);
    for (double f : cfg.gap_fractions) rr.final_fracs.push_back(sim.gap_fraction_above(f));
    rr.final_max_gap = res.series.empty() ? 0.0 : res.series.back().max_gap;
    if (r == 0) {
      out.series0 = std::move(res.series);
      out.history0 = sim.trackers().history();
      out.events0 = std::move(res.event_trace);
    }
  });

  long long events_total = 0;
  double drift_max = 0.0;
  double max_tracked = 0.0;
  double classes_mean = 0.0;
  for (const ReplicaResult& rr : results) {
    events_total += rr.events;
    drift_max = std::max(drift_max, rr.drift);
    max_tracked = std::max(max_tracked, rr.max_tracked_gap);
    classes_mean += rr.classes;
  }
  classes_mean /= static_cast<double>(cfg.replicas);

  nlohmann::json thresholds_json = nlohmann::json::array();
  for (std::size_t t = 0; t < sorted_thresholds.size(); ++t) {
    long long hits = 0;
    for (const ReplicaResult& rr : results) hits += rr.exceeded[t];
    const WilsonInterval ci = wilson_interval(hits, cfg.replicas);
    thresholds_json.push_back({{"threshold", sorted_thresholds[t]},
                               {"replicas_exceeding", hits},
                               {"fraction", static_cast<double>(hits) / cfg.replicas},
                               {"wilson_low", ci.low},
                               {"wilson_high", ci.high}});
    if (t + 1 == sorted_thresholds.size())
      out.replicas_with_top_threshold_witness = static_cast<int>(hits);
  }

  nlohmann::json fracs_json = nlohmann::json::array();
  for (std::size_t f = 0; f < cfg.gap_fractions.size(); ++f) {
    double mean = 0.0;
    for (const ReplicaResult& rr : results) mean += rr.final_fracs[f];
    fracs_json.push_back(
        {{"threshold", cfg.gap_fractions[f]}, {"mean_fraction", mean / cfg.replicas}});
  }

  nlohmann::json replicas_json = nlohmann::json::array();
  for (std::size_t r = 0; r < results.size(); ++r) {
    const ReplicaResult& rr = results[r];
    nlohmann::json exceeded = nlohmann::json::array();
    for (std::size_t t = 0; t < sorted_thresholds.size(); ++t)
      exceeded.push_back(rr.exceeded[t] != 0);
    replicas_json.push_back({{"replica", r},
                             {"events", rr.events},
                             {"classes", rr.classes},
                             {"max_tracked_gap", rr.max_tracked_gap},
                             {"final_max_gap", rr.final_max_gap},
                             {"exceeded", exceeded},
                             {"conservation_drift", rr.drift}});
  }

  out.summary = {{"config", cfg.echo()},
                 {"results",
                  {{"replicas", cfg.replicas},
                   {"events_total", events_total},
                   {"thresholds", thresholds_json},
                   {"final_gap_fractions", fracs_json},
                   {"max_tracked_gap", max_tracked},
                   {"mean_final_classes", classes_mean},
                   {"conservation_drift_max", drift_max},
                   {"per_replica", replicas_json},
                   {"invariant_checks", "passed"}}},
                 {"timing", {{"wall_clock_seconds", clock.seconds()}}}};
  return out;
}

inline void write_simulate_outputs(const ExperimentConfig& cfg, const SimulateOutput& out,
                                   bool force_trace = false) {
  const std::string dir = cfg.out_dir + "/";
  write_series_csv(dir + "series.csv", out.series0);
  if (cfg.emit_trace || force_trace) write_tracker_csv(dir + "trackers.csv", out.history0);
  if (cfg.emit_events) write_events_csv(dir + "events.csv", out.events0);
  {
    std::ofstream js = open_output(dir + "summary.json");
    js << out.summary.dump(2) << '\n';
  }
  if (cfg.emit_svg) {
    SvgSeries max_gap{"max_gap", {}, {}};
    for (const SeriesRow& r : out.series0) {
      max_gap.x.push_back(r.t);
      max_gap.y.push_back(std::max(r.max_gap, 1e-6));
    }
    write_line_svg(dir + "gap_vs_time.svg", {max_gap}, "largest edge gap vs time", true);
  }
}

// ---------------------------------------------------------------------------
// dominated walk
// ---------------------------------------------------------------------------

inline nlohmann::json run_xprocess(const ExperimentConfig& cfg) {
  cfg.validate();
  const ModelParams p = cfg.params();
  harness_detail::Stopwatch clock;
  std::vector<double> endpoints(static_cast<std::size_t>(cfg.replicas));
  harness_detail::for_each_replica(cfg.replicas, cfg.threads, [&](int r) {
    Rng rng(replica_seed(cfg.seed, static_cast<std::uint64_t>(r)));
    endpoints[static_cast<std::size_t>(r)] =
        walk_log_endpoint(std::log(cfg.x0), p, cfg.t_max, rng);
  });
  MeanVar acc;
  for (double e : endpoints) acc.add(e);
  const double drift_est = (acc.mean - std::log(cfg.x0)) / cfg.t_max;
  const double drift_expected = walk_log_drift(p);

  Rng rng0(replica_seed(cfg.seed, 0));
  const WalkTrajectory traj = simulate_dominated_walk(cfg.x0, p, std::min(cfg.t_max, 50.0), rng0);

  nlohmann::json j = {{"config", cfg.echo()},
                      {"results",
                       {{"replicas", cfg.replicas},
                        {"t_max", cfg.t_max},
                        {"x0", cfg.x0},
                        {"log_drift_estimate", drift_est},
                        {"log_drift_expected", drift_expected},
                        {"log_endpoint_mean", acc.mean},
                        {"log_endpoint_sem", acc.sem()},
                        {"trajectory_jumps", traj.times.size() - 1}}},
                      {"timing", {{"wall_clock_seconds", clock.seconds()}}}};

  const std::string dir = cfg.out_dir + "/";
  std::ofstream csv = open_output(dir + "xprocess.csv");
  csv << "t,log_x\n";
  for (std::size_t i = 0; i < traj.times.size(); ++i)
    csv << format_double(traj.times[i]) << ',' << format_double(traj.log_values[i]) << '\n';
  std::ofstream js = open_output(dir + "xprocess.json");
  js << j.dump(2) << '\n';
  return j;
}

// ---------------------------------------------------------------------------
// certificate
// ---------------------------------------------------------------------------

inline nlohmann::json run_certificate(const ExperimentConfig& cfg) {
  const ModelParams p = cfg.params();
  const Certificate cert = find_certificate(p, cfg.certificate_tol);
  nlohmann::json j = {{"config", cfg.echo()},
                      {"results",
                       {{"c0", cert.c0},
                        {"phi_at_c0", cert.phi_at_c0},
                        {"escape_bound", cert.escape_bound},
                        {"tol", cfg.certificate_tol},
                        {"rho_minus", p.rho_minus},
                        {"rho_plus", p.rho_plus},
                        {"dominance_gap", p.dominance_gap},
                        {"kick_count", p.kick_count},
                        {"divergence_probability_bound",
                         divergence_probability_bound(p, cfg.certificate_tol)}}}};
  std::ofstream js = open_output(cfg.out_dir + "/certificate.json");
  js << j.dump(2) << '\n';
  return j;
}

// ---------------------------------------------------------------------------
// meanfield
// ---------------------------------------------------------------------------

inline nlohmann::json run_meanfield_cmd(const ExperimentConfig& cfg) {
  cfg.validate();
  harness_detail::Stopwatch clock;
  MeanfieldOptions o;
  o.theta = cfg.theta;
  o.mu_plus = cfg.mu_plus;
  o.half_width = cfg.half_width;
  o.spacing = cfg.spacing;
  o.dt = cfg.dt;
  o.t_max = cfg.t_max;
  o.support_delta = cfg.support_delta;
  o.include_repulsion = cfg.mu_plus > 0.0;
  o.snapshot_times = cfg.snapshot_times.empty()
                         ? std::vector<double>{0.0, 0.5 * cfg.t_max, cfg.t_max}
                         : cfg.snapshot_times;
  const MeanfieldResult res = run_meanfield(o);

  const std::string dir = cfg.out_dir + "/";
  write_meanfield_csv(dir + "meanfield.csv", res.series);
  for (const auto& [t, values] : res.snapshots) {
    DensityGrid snap(cfg.half_width, cfg.spacing);
    snap.values() = values;
    write_profile_csv(dir + "profile_t" + format_short(t) + ".csv", snap);
  }
  nlohmann::json j = {{"config", cfg.echo()},
                      {"results",
                       {{"c_plus", res.c_plus},
                        {"final_support_radius", res.final_support_radius},
                        {"max_support_radius", res.max_support_radius},
                        {"support_grew", res.support_grew},
                        {"boundary_reached", res.boundary_reached},
                        {"max_step_clip", res.max_step_clip},
                        {"final_mass_total", res.series.back().mass_total},
                        {"final_mass_unit", res.series.back().mass_unit}}},
                      {"timing", {{"wall_clock_seconds", clock.seconds()}}}};
  std::ofstream js = open_output(dir + "meanfield.json");
  js << j.dump(2) << '\n';
  if (cfg.emit_svg) {
    SvgSeries radius{"support_radius", {}, {}};
    for (const MeanfieldSeriesRow& r : res.series) {
      radius.x.push_back(r.t);
      radius.y.push_back(r.support_radius);
    }
    write_line_svg(dir + "meanfield_support.svg", {radius}, "support radius vs time", false);
    std::vector<SvgSeries> profiles;
    for (const auto& [t, values] : res.snapshots) {
      SvgSeries s{"t=" + format_short(t), {}, {}};
      DensityGrid snap(cfg.half_width, cfg.spacing);
      for (int i = 0; i < snap.size(); ++i) {
        s.x.push_back(snap.coordinate(i));
        s.y.push_back(values[static_cast<std::size_t>(i)]);
      }
      profiles.push_back(std::move(s));
    }
    if (!profiles.empty())
      write_line_svg(dir + "meanfield_profiles.svg", profiles, "density profiles", false);
  }
  return j;
}

// ---------------------------------------------------------------------------
// forced increase / verify
// ---------------------------------------------------------------------------

inline nlohmann::json run_forced_increase_cmd(const ExperimentConfig& cfg) {
  const ModelParams p = cfg.params();
  const ForcedIncreaseReport rep = run_forced_increase(p);
  nlohmann::json j = {{"config", cfg.echo()},
                      {"results",
                       {{"kicks", rep.kicks},
                        {"initial_gap", rep.initial_gap},
                        {"final_gap", rep.final_gap},
                        {"two_dominance", rep.two_dominance},
                        {"theta_rho_pow_k", rep.theta_rho_pow_k},
                        {"tracker_stayed", rep.tracker_stayed},
                        {"pass", rep.pass}}}};
  std::ofstream js = open_output(cfg.out_dir + "/forced_increase.json");
  js << j.dump(2) << '\n';
  return j;
}

inline nlohmann::json run_verify_cmd(const ExperimentConfig& cfg, double scale = 1.0) {
  const ModelParams p = cfg.params();
  harness_detail::Stopwatch clock;
  const VerifySuite suite = run_verification(p, cfg.seed, scale);
  nlohmann::json checks = nlohmann::json::array();
  for (const CheckResult& c : suite.checks)
    checks.push_back({{"name", c.name},
                      {"pass", c.pass},
                      {"samples", c.samples},
                      {"worst_margin", c.worst_margin},
                      {"note", c.note}});
  nlohmann::json j = {{"config", cfg.echo()},
                      {"results", {{"checks", checks}, {"all_pass", suite.all_pass}}},
                      {"timing", {{"wall_clock_seconds", clock.seconds()}}}};
  std::ofstream js = open_output(cfg.out_dir + "/verify.json");
  js << j.dump(2) << '\n';
  return j;
}

}  // namespace opdyn
