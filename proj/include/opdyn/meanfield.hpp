#pragma once

#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include "opdyn/simulation.hpp"

namespace opdyn {

// Discretized opinion density u(a, t) on a uniform symmetric grid over
// [-half_width, half_width]. Grid points are (i - center) * spacing, so the
// axis is exactly symmetric about zero.
class DensityGrid {
 public:
  DensityGrid(double half_width, double spacing) : spacing_(spacing) {
    if (!(half_width > 1.0)) throw std::invalid_argument("density grid: half width must exceed 1");
    if (!(spacing > 0.0) || !(spacing < half_width))
      throw std::invalid_argument("density grid: bad spacing");
    center_ = static_cast<int>(std::llround(half_width / spacing));
    half_width_ = center_ * spacing;  // snap to a whole number of cells
    values_.assign(static_cast<std::size_t>(2 * center_ + 1), 0.0);
  }

  // Uniform block u = 1/2 on [-1, 1], zero elsewhere.
  static DensityGrid uniform_unit_block(double half_width, double spacing) {
    DensityGrid g(half_width, spacing);
    for (int i = 0; i < g.size(); ++i)
      if (std::abs(g.coordinate(i)) <= 1.0 + 1e-12) g.values_[static_cast<std::size_t>(i)] = 0.5;
    return g;
  }

  int size() const { return static_cast<int>(values_.size()); }
  int center() const { return center_; }
  double spacing() const { return spacing_; }
  double half_width() const { return half_width_; }
  double coordinate(int i) const { return (i - center_) * spacing_; }
  double time() const { return time_; }
  void advance(double dt) { time_ += dt; }

  double operator[](int i) const { return values_[static_cast<std::size_t>(i)]; }
  double& operator[](int i) { return values_[static_cast<std::size_t>(i)]; }
  const std::vector<double>& values() const { return values_; }
  std::vector<double>& values() { return values_; }

  // Linear interpolation in index space, zero outside the grid.
  double value_at_index(double pos) const {
    if (pos <= -1.0 || pos >= static_cast<double>(size())) return 0.0;
    const double f = std::floor(pos);
    const int i = static_cast<int>(f);
    const double frac = pos - f;
    const double lo = (i >= 0 && i < size()) ? values_[static_cast<std::size_t>(i)] : 0.0;
    const double hi = (i + 1 >= 0 && i + 1 < size()) ? values_[static_cast<std::size_t>(i + 1)] : 0.0;
    return lo * (1.0 - frac) + hi * frac;
  }

  double value_at(double x) const { return value_at_index(x / spacing_ + center_); }

  double mass_total() const {
    double s = 0.0;
    for (double v : values_) s += v;
    s -= 0.5 * (values_.front() + values_.back());
    return s * spacing_;
  }

  double mass_between(double lo, double hi) const {
    double s = 0.0;
    for (int i = 0; i < size(); ++i) {
      const double a = coordinate(i);
      if (a >= lo - 1e-12 && a <= hi + 1e-12) s += values_[static_cast<std::size_t>(i)];
    }
    return s * spacing_;
  }

  // Largest |a| carrying density above delta; 0 when none does.
  double support_radius(double delta) const {
    double r = 0.0;
    for (int i = 0; i < size(); ++i)
      if (values_[static_cast<std::size_t>(i)] > delta)
        r = std::max(r, std::abs(coordinate(i)));
    return r;
  }

 private:
  double spacing_;
  double half_width_;
  int center_ = 0;
  double time_ = 0.0;
  std::vector<double> values_;
};

namespace meanfield_detail {
// Products where either factor is below this floor are skipped when choosing
// integration windows; their contribution is below 1e-15 per step and the
// windows would otherwise grow to the whole grid through vanishing tails.
inline constexpr double kGainFloor = 1e-16;

inline void support_bounds(const std::vector<double>& u, int& lo, int& hi) {
  lo = -1;
  hi = -1;
  for (int i = 0; i < static_cast<int>(u.size()); ++i) {
    if (u[static_cast<std::size_t>(i)] > kGainFloor) {
      if (lo < 0) lo = i;
      hi = i;
    }
  }
}
}  // namespace meanfield_detail

// du/dt of the kinetic equation: gain from compromises of pairs straddling a
// at distance up to theta/2, gain from repulsions that land one partner on a,
// loss -u(a). Trapezoidal quadrature on the grid's own spacing; the b-grid is
// aligned with the a-grid so the first factor never needs interpolation, and
// the stretched partner argument b/mu_plus is linearly interpolated.
inline std::vector<double> density_rate(const DensityGrid& g, double theta, double mu_plus,
                                        bool include_repulsion = true) {
  const int n = g.size();
  const double da = g.spacing();
  const auto& u = g.values();
  std::vector<double> rate(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) rate[static_cast<std::size_t>(i)] = -u[static_cast<std::size_t>(i)];

  int lo, hi;
  meanfield_detail::support_bounds(u, lo, hi);
  if (lo < 0) return rate;

  // attraction: b in [-theta/2, theta/2], half weights at the interval ends
  const int kb = static_cast<int>(theta / (2.0 * da) + 1e-9);
  for (int i = lo; i <= hi; ++i) {
    const int kmin = std::max({-kb, lo - i, i - hi});
    const int kmax = std::min({kb, hi - i, i - lo});
    double acc = 0.0;
    for (int k = kmin; k <= kmax; ++k) {
      const double w = (k == kb || k == -kb) ? 0.5 : 1.0;
      acc += w * u[static_cast<std::size_t>(i + k)] * u[static_cast<std::size_t>(i - k)];
    }
    rate[static_cast<std::size_t>(i)] += acc * da;
  }

  if (!include_repulsion || !(mu_plus > 0.0)) return rate;

  // repulsion: |b| strictly above theta*mu_plus; partner argument offset is
  // k * (1 + 1/mu_plus) grid cells
  const double stretch = 1.0 + 1.0 / mu_plus;
  const int kmin = static_cast<int>(theta * mu_plus / da + 1e-9) + 1;
  const int reach = static_cast<int>(mu_plus * (hi - lo)) + 2;
  const int i_lo = std::max(0, lo - reach);
  const int i_hi = std::min(n - 1, hi + reach);
  for (int i = i_lo; i <= i_hi; ++i) {
    double acc = 0.0;
    for (int side = -1; side <= 1; side += 2) {
      const int kcap = side > 0 ? hi - i : i - lo;
      for (int k = kmin; k <= kcap; ++k) {
        const double v1 = u[static_cast<std::size_t>(i + side * k)];
        if (v1 <= meanfield_detail::kGainFloor) continue;
        const double v2 = g.value_at_index(static_cast<double>(i) + side * k * stretch);
        if (v2 <= 0.0) continue;
        const double w = (k == kmin || k == kcap) ? 0.5 : 1.0;
        acc += w * v1 * v2;
      }
    }
    rate[static_cast<std::size_t>(i)] += acc * da;
  }
  return rate;
}

struct StepStats {
  double clipped_mass = 0.0;
};

// Explicit Euler step; negative values are clipped to zero and the clipped
// mass reported. Non-finite values abort.
inline StepStats density_step(DensityGrid& g, double theta, double mu_plus, double dt,
                              bool include_repulsion = true) {
  if (!(dt > 0.0)) throw std::invalid_argument("density_step: dt must be positive");
  const std::vector<double> rate = density_rate(g, theta, mu_plus, include_repulsion);
  StepStats stats;
  auto& u = g.values();
  for (int i = 0; i < g.size(); ++i) {
    double v = u[static_cast<std::size_t>(i)] + dt * rate[static_cast<std::size_t>(i)];
    if (!std::isfinite(v)) throw NumericalError("non-finite density", g.time());
    if (v < 0.0) {
      stats.clipped_mass += -v * g.spacing();
      v = 0.0;
    }
    u[static_cast<std::size_t>(i)] = v;
  }
  g.advance(dt);
  return stats;
}

// ---------------------------------------------------------------------------
// Escalation interval algebra
// ---------------------------------------------------------------------------

struct EscalationIntervals {
  double c_plus;                  // (2 mu_plus + 1)(c0 + eps)
  double j_lo, j_hi;              // admissible b interval
  double i_neg_lo, i_neg_hi;      // negative branch of the seeded interval
  double i_pos_lo, i_pos_hi;      // positive branch
  double rate_bound;              // 2 eps^3 / (1 + 1/mu_plus)
};

inline EscalationIntervals escalation_intervals(double theta, double mu_plus, double c0_profile,
                                                double epsilon) {
  if (!(mu_plus > 0.0)) throw std::invalid_argument("escalation_intervals: needs mu_plus > 0");
  if (!(c0_profile >= theta / 2.0))
    throw std::invalid_argument("escalation_intervals: profile constant below theta/2");
  if (!(epsilon >= 0.0)) throw std::invalid_argument("escalation_intervals: negative epsilon");
  EscalationIntervals e;
  e.c_plus = (2.0 * mu_plus + 1.0) * (c0_profile + epsilon);
  const double j_center = -2.0 * mu_plus * (c0_profile + epsilon);
  const double j_half = epsilon / (1.0 + 1.0 / mu_plus);
  e.j_lo = j_center - j_half;
  e.j_hi = j_center + j_half;
  e.i_pos_lo = c0_profile;
  e.i_pos_hi = c0_profile + 2.0 * epsilon;
  e.i_neg_lo = -e.i_pos_hi;
  e.i_neg_hi = -e.i_pos_lo;
  e.rate_bound = 2.0 * epsilon * epsilon * epsilon / (1.0 + 1.0 / mu_plus);
  return e;
}

// For n_samples values of b spanning the admissible interval (endpoints
// included) verifies that both c_plus + b and c_plus + b + b/mu_plus land in
// the seeded interval. Exact in real arithmetic; tol absorbs rounding.
// epsilon = 0 is degenerate and reported through *degenerate.
inline bool check_escalation_intervals(double theta, double mu_plus, double c0_profile,
                                       double epsilon, int n_samples, double tol = 1e-12,
                                       bool* degenerate = nullptr) {
  const EscalationIntervals e = escalation_intervals(theta, mu_plus, c0_profile, epsilon);
  if (degenerate) *degenerate = (epsilon == 0.0);
  if (epsilon == 0.0) return true;
  if (n_samples < 2) n_samples = 2;
  const auto in_seeded = [&](double x) {
    return (x >= e.i_neg_lo - tol && x <= e.i_neg_hi + tol) ||
           (x >= e.i_pos_lo - tol && x <= e.i_pos_hi + tol);
  };
  for (int s = 0; s < n_samples; ++s) {
    const double b = e.j_lo + (e.j_hi - e.j_lo) * s / static_cast<double>(n_samples - 1);
    if (!in_seeded(e.c_plus + b)) return false;
    if (!in_seeded(e.c_plus + b + b / mu_plus)) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Full integration runs
// ---------------------------------------------------------------------------

struct MeanfieldOptions {
  double theta = 1.0;
  double mu_plus = 0.25;
  double half_width = 8.0;
  double spacing = 0.02;
  double dt = 0.005;
  double t_max = 20.0;
  double support_delta = 1e-4;
  double sample_dt = 0.1;
  bool include_repulsion = true;
  std::vector<double> snapshot_times;
};

struct MeanfieldSeriesRow {
  double t;
  double support_radius;
  double mass_total;
  double mass_unit;  // mass in [-1, 1]
  double u_at_c_plus;
};

struct MeanfieldResult {
  std::vector<MeanfieldSeriesRow> series;
  std::vector<std::pair<double, std::vector<double>>> snapshots;
  double c_plus = 0.0;
  double final_support_radius = 0.0;
  double max_support_radius = 0.0;  // largest radius reached during the run;
                                    // the density level decays with time, so
                                    // the radius can fall back under delta
  bool support_grew = false;        // radius strictly above 1 at some time
  bool boundary_reached = false;    // density above delta at the domain edge
  double max_step_clip = 0.0;
};

// Integrates from the uniform block profile u(a,0) = 1/2 on [-1,1] and
// tracks how far the support spreads. c_plus is the first escalation target
// of the time-zero profile, (2 mu_plus + 1)(1/2 + theta/4).
inline MeanfieldResult run_meanfield(const MeanfieldOptions& o) {
  DensityGrid g = DensityGrid::uniform_unit_block(o.half_width, o.spacing);
  MeanfieldResult res;
  res.c_plus = (2.0 * o.mu_plus + 1.0) * (0.5 + o.theta / 4.0);

  const long long n_steps = std::llround(o.t_max / o.dt);
  const long long stride = std::max<long long>(1, std::llround(o.sample_dt / o.dt));
  std::size_t next_snapshot = 0;

  const auto sample = [&]() {
    const double radius = g.support_radius(o.support_delta);
    res.series.push_back({g.time(), radius, g.mass_total(), g.mass_between(-1.0, 1.0),
                          g.value_at(res.c_plus)});
    res.max_support_radius = std::max(res.max_support_radius, radius);
    if (g[0] > o.support_delta || g[g.size() - 1] > o.support_delta) res.boundary_reached = true;
  };

  sample();
  while (next_snapshot < o.snapshot_times.size() && o.snapshot_times[next_snapshot] <= 0.0) {
    res.snapshots.emplace_back(0.0, g.values());
    ++next_snapshot;
  }
  for (long long s = 1; s <= n_steps; ++s) {
    const StepStats st = density_step(g, o.theta, o.mu_plus, o.dt, o.include_repulsion);
    res.max_step_clip = std::max(res.max_step_clip, st.clipped_mass);
    if (s % stride == 0 || s == n_steps) sample();
    while (next_snapshot < o.snapshot_times.size() &&
           g.time() >= o.snapshot_times[next_snapshot] - 0.5 * o.dt) {
      res.snapshots.emplace_back(g.time(), g.values());
      ++next_snapshot;
    }
  }
  res.final_support_radius = res.series.back().support_radius;
  res.support_grew = res.max_support_radius > 1.0;
  return res;
}

}  // namespace opdyn
