#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "opdyn/events.hpp"
#include "opdyn/model.hpp"
#include "opdyn/tracker.hpp"

namespace opdyn {

// Simulation state left the representable range (overflow / NaN).
struct NumericalError : std::runtime_error {
  double time;
  explicit NumericalError(const std::string& what, double t)
      : std::runtime_error(what + " at t=" + std::to_string(t)), time(t) {}
};

// A dynamics invariant that must hold on every trajectory failed.
struct InvariantViolation : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SimulationOptions {
  double t_max = 200.0;
  double sample_dt = 1.0;
  int tracker_stride = 0;  // 0: every edge up to 4096 edges, then ceil(E/4096)
  int history_stride = 16;
  bool check_invariants = true;
  bool record_events = false;
};

struct SeriesRow {
  double t;
  double max_gap;
  long long gaps_above_theta;
  double mean_abs_opinion;
};

struct SimulationResult {
  std::vector<SeriesRow> series;
  long long events = 0;
  double final_time = 0.0;
  double conservation_drift = 0.0;  // |sum - initial sum| / max(1, sum |opinions|)
  std::vector<Event> event_trace;
};

inline std::vector<int> default_tracker_origins(int edge_count, int stride) {
  if (stride <= 0) stride = edge_count <= 4096 ? 1 : (edge_count + 4095) / 4096;
  std::vector<int> origins;
  for (int e = 0; e < edge_count; e += stride) origins.push_back(e);
  return origins;
}

// One replica of the lattice dynamics with its tracker set. Events are
// processed strictly sequentially; the live checks assert, on every event
// adjacent to a tracker holding a gap above the dominance level, that the
// post-event window maximum keeps the rho_minus ratio, and on every event on
// a tracked edge with gap above theta that the gap grows by exactly rho_plus.
class LatticeSimulation {
 public:
  LatticeSimulation(const ModelParams& params, OpinionLattice lattice, Rng stream_rng,
                    SimulationOptions opt = {})
      : params_(params),
        lattice_(std::move(lattice)),
        stream_(lattice_.edge_count(), stream_rng),
        trackers_(default_tracker_origins(lattice_.edge_count(), opt.tracker_stride), lattice_,
                  opt.history_stride),
        opt_(opt),
        initial_sum_(lattice_.opinion_sum()) {}

  LatticeSimulation(const ModelParams& params, OpinionLattice lattice, Rng stream_rng,
                    std::vector<int> tracker_origins, SimulationOptions opt)
      : params_(params),
        lattice_(std::move(lattice)),
        stream_(lattice_.edge_count(), stream_rng),
        trackers_(std::move(tracker_origins), lattice_, opt.history_stride),
        opt_(opt),
        initial_sum_(lattice_.opinion_sum()) {}

  SimulationResult run() {
    SimulationResult res;
    double next_sample = 0.0;
    for (;;) {
      const Event ev = stream_.next();
      if (ev.time > opt_.t_max) break;
      while (next_sample < ev.time && next_sample <= opt_.t_max) {
        res.series.push_back(sample_row(next_sample));
        next_sample += opt_.sample_dt;
      }
      process_event(ev);
      ++res.events;
      if (opt_.record_events) res.event_trace.push_back(ev);
    }
    while (next_sample <= opt_.t_max + 1e-12 * opt_.t_max) {
      res.series.push_back(sample_row(next_sample));
      next_sample += opt_.sample_dt;
    }
    res.final_time = opt_.t_max;
    res.conservation_drift = std::abs(lattice_.opinion_sum() - initial_sum_) /
                             std::max(1.0, lattice_.abs_opinion_sum());
    return res;
  }

  const OpinionLattice& lattice() const { return lattice_; }
  const TrackerSet& trackers() const { return trackers_; }
  const ModelParams& params() const { return params_; }

  // Fraction of edges whose gap currently exceeds the threshold.
  double gap_fraction_above(double threshold) const {
    long long n = 0;
    const int m = lattice_.edge_count();
    for (int e = 0; e < m; ++e)
      if (lattice_.gap(e) > threshold) ++n;
    return static_cast<double>(n) / static_cast<double>(m);
  }

 private:
  struct Affected {
    int edge;
    double pre_gap;
  };

  void process_event(const Event& ev) {
    Affected affected[3];
    int n_affected = 0;
    for (int d = -1; d <= 1; ++d) {
      const int e = lattice_.neighbor_edge(ev.edge, d);
      if (e < 0) continue;
      if (trackers_.class_at_edge(e) >= 0)
        affected[n_affected++] = {e, lattice_.gap(e)};
    }

    const double pre_pair_sum = lattice_.opinion(lattice_.left_site(ev.edge)) +
                                lattice_.opinion(lattice_.right_site(ev.edge));
    const InteractionOutcome out = lattice_.interact_on(ev.edge, params_);
    lattice_.apply(ev.edge, out);
    if (!std::isfinite(out.new_left) || !std::isfinite(out.new_right))
      throw NumericalError("non-finite opinion", ev.time);
    if (opt_.check_invariants && ++event_counter_ % 64 == 0) {
      const double scale =
          std::max({std::abs(out.new_left), std::abs(out.new_right), 1.0});
      if (std::abs(out.new_left + out.new_right - pre_pair_sum) > 1e-12 * scale)
        throw InvariantViolation("pair-sum conservation violated at t=" +
                                 std::to_string(ev.time));
    }

    trackers_.on_event(ev, lattice_);

    if (!opt_.check_invariants) return;
    for (int k = 0; k < n_affected; ++k) {
      const Affected& a = affected[k];
      const double scale =
          std::max({a.pre_gap, std::abs(out.new_left), std::abs(out.new_right), 1.0});
      if (a.edge == ev.edge) {
        if (a.pre_gap > params_.theta) {
          const double post = lattice_.gap(ev.edge);
          if (std::abs(post - params_.rho_plus * a.pre_gap) > 1e-12 * scale)
            throw InvariantViolation("repulsion multiplier violated at t=" +
                                     std::to_string(ev.time));
        }
      } else if (params_.divergence_constants_defined && a.pre_gap > params_.dominance_gap) {
        double window_max = lattice_.gap(a.edge);
        for (int d = -1; d <= 1; d += 2) {
          const int e = lattice_.neighbor_edge(a.edge, d);
          if (e >= 0) window_max = std::max(window_max, lattice_.gap(e));
        }
        if (window_max < params_.rho_minus * a.pre_gap - 1e-12 * scale)
          throw InvariantViolation("window domination violated at t=" + std::to_string(ev.time) +
                                   ": max " + std::to_string(window_max) + " < rho_minus * " +
                                   std::to_string(a.pre_gap));
      }
    }
  }

  SeriesRow sample_row(double t) const {
    SeriesRow row{t, 0.0, 0, 0.0};
    const int m = lattice_.edge_count();
    for (int e = 0; e < m; ++e) {
      const double g = lattice_.gap(e);
      row.max_gap = std::max(row.max_gap, g);
      if (g > params_.theta) ++row.gaps_above_theta;
    }
    row.mean_abs_opinion = lattice_.abs_opinion_sum() / static_cast<double>(lattice_.sites());
    return row;
  }

  ModelParams params_;
  OpinionLattice lattice_;
  EventStream stream_;
  TrackerSet trackers_;
  SimulationOptions opt_;
  double initial_sum_;
  long long event_counter_ = 0;
};

}  // namespace opdyn
