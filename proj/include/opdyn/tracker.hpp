#pragma once

#include <algorithm>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include "opdyn/events.hpp"
#include "opdyn/model.hpp"

namespace opdyn {

struct TrackerHistoryRow {
  double time;
  int class_id;
  int edge;
  double gap;
};

struct TrackerClassStats {
  int class_id;      // representative origin index
  int origin_count;  // coalesced origins in the class
  int edge;          // current position
  double max_gap;    // largest gap seen at the class position
  double final_gap;  // gap at the position when the report was taken
};

struct DivergenceReport {
  std::vector<double> thresholds;          // ascending
  std::vector<TrackerClassStats> classes;  // one entry per live class
  std::vector<int> classes_exceeding;      // per threshold: classes with max_gap > threshold
  int top_exceeding = 0;                   // count for the largest threshold (0 if none given)
};

// Coalescing gap trackers: one process per monitored origin edge. A tracker
// relocates whenever an interaction happens on or next to its current edge,
// jumping to whichever of the three surrounding edges carries the largest
// post-interaction gap. Trackers that land on the same edge merge into one
// class and never separate.
//
// Argmax ties (measure zero in exact arithmetic, possible in floats) keep the
// current edge if it participates, otherwise take the smaller edge index.
class TrackerSet {
 public:
  TrackerSet(std::vector<int> origins, const OpinionLattice& lat, int history_stride = 1)
      : origin_edges_(std::move(origins)),
        history_stride_(std::max(1, history_stride)),
        class_at_edge_(static_cast<std::size_t>(lat.edge_count()), -1) {
    const int n = static_cast<int>(origin_edges_.size());
    if (n == 0) throw std::invalid_argument("trackers: need at least one origin edge");
    parent_.resize(static_cast<std::size_t>(n));
    std::iota(parent_.begin(), parent_.end(), 0);
    position_.resize(static_cast<std::size_t>(n));
    max_gap_.resize(static_cast<std::size_t>(n));
    origin_count_.assign(static_cast<std::size_t>(n), 1);
    touch_count_.assign(static_cast<std::size_t>(n), 0);
    for (int i = 0; i < n; ++i) {
      const int e = origin_edges_[static_cast<std::size_t>(i)];
      if (e < 0 || e >= lat.edge_count())
        throw std::invalid_argument("trackers: origin edge out of range");
      if (class_at_edge_[static_cast<std::size_t>(e)] != -1)
        throw std::invalid_argument("trackers: duplicate origin edge");
      class_at_edge_[static_cast<std::size_t>(e)] = i;
      position_[static_cast<std::size_t>(i)] = e;
      max_gap_[static_cast<std::size_t>(i)] = lat.gap(e);
      history_.push_back({0.0, i, e, max_gap_[static_cast<std::size_t>(i)]});
    }
  }

  int origin_count() const { return static_cast<int>(origin_edges_.size()); }
  const std::vector<int>& origin_edges() const { return origin_edges_; }

  // Class representative (no compression; usable on const objects).
  int root_of(int i) const {
    while (parent_[static_cast<std::size_t>(i)] != i) i = parent_[static_cast<std::size_t>(i)];
    return i;
  }

  int class_at_edge(int edge) const { return class_at_edge_[static_cast<std::size_t>(edge)]; }
  int position(int root) const { return position_[static_cast<std::size_t>(root)]; }
  double max_gap(int root) const { return max_gap_[static_cast<std::size_t>(root)]; }

  int live_class_count() const {
    int n = 0;
    for (int i = 0; i < origin_count(); ++i)
      if (parent_[static_cast<std::size_t>(i)] == i) ++n;
    return n;
  }

  // Post-interaction argmax target for a tracker currently at `edge`.
  int best_edge_around(int edge, const OpinionLattice& lat) const {
    int best = edge;
    double best_gap = lat.gap(edge);
    int nbr[2] = {lat.neighbor_edge(edge, -1), lat.neighbor_edge(edge, +1)};
    if (nbr[0] > nbr[1]) std::swap(nbr[0], nbr[1]);
    for (int e : nbr) {
      if (e < 0 || e == edge) continue;
      const double g = lat.gap(e);
      if (g > best_gap) {
        best = e;
        best_gap = g;
      }
    }
    return best;
  }

  // Relocate every tracker within one edge of the interaction and merge the
  // classes that collide. The lattice must already hold the post-interaction
  // opinions.
  void on_event(const Event& ev, const OpinionLattice& lat) {
    int roots[3];
    int old_edge[3];
    int count = 0;
    for (int d = -1; d <= 1; ++d) {
      const int e = lat.neighbor_edge(ev.edge, d);
      if (e < 0) continue;
      const int c = class_at_edge_[static_cast<std::size_t>(e)];
      if (c >= 0) {
        roots[count] = c;
        old_edge[count] = e;
        ++count;
      }
    }
    if (count == 0) return;

    int dest[3];
    for (int k = 0; k < count; ++k) dest[k] = best_edge_around(old_edge[k], lat);
    for (int k = 0; k < count; ++k) class_at_edge_[static_cast<std::size_t>(old_edge[k])] = -1;

    int placed[3];
    int n_placed = 0;
    for (int k = 0; k < count; ++k) {
      int r = find(roots[k]);
      const int d = dest[k];
      const int occupant = class_at_edge_[static_cast<std::size_t>(d)];
      if (occupant == -1) {
        class_at_edge_[static_cast<std::size_t>(d)] = r;
        position_[static_cast<std::size_t>(r)] = d;
      } else {
        const int s = find(occupant);
        if (s != r) {
          r = merge(r, s, d);
          class_at_edge_[static_cast<std::size_t>(d)] = r;
        }
      }
      bool seen = false;
      for (int j = 0; j < n_placed; ++j) seen |= (find(placed[j]) == find(r));
      if (!seen) placed[n_placed++] = r;
    }

    for (int j = 0; j < n_placed; ++j) {
      const int r = find(placed[j]);
      const int e = position_[static_cast<std::size_t>(r)];
      const double g = lat.gap(e);
      if (g > max_gap_[static_cast<std::size_t>(r)]) max_gap_[static_cast<std::size_t>(r)] = g;
      if (++touch_count_[static_cast<std::size_t>(r)] % history_stride_ == 0)
        history_.push_back({ev.time, r, e, g});
    }
  }

  const std::vector<TrackerHistoryRow>& history() const { return history_; }

  DivergenceReport divergence_stats(const OpinionLattice& lat,
                                    std::span<const double> thresholds) const {
    DivergenceReport rep;
    rep.thresholds.assign(thresholds.begin(), thresholds.end());
    std::sort(rep.thresholds.begin(), rep.thresholds.end());
    rep.classes_exceeding.assign(rep.thresholds.size(), 0);
    for (int i = 0; i < origin_count(); ++i) {
      if (parent_[static_cast<std::size_t>(i)] != i) continue;
      const int e = position_[static_cast<std::size_t>(i)];
      TrackerClassStats s{i, origin_count_[static_cast<std::size_t>(i)], e,
                          max_gap_[static_cast<std::size_t>(i)], lat.gap(e)};
      for (std::size_t t = 0; t < rep.thresholds.size(); ++t)
        if (s.max_gap > rep.thresholds[t]) ++rep.classes_exceeding[t];
      rep.classes.push_back(s);
    }
    rep.top_exceeding = rep.thresholds.empty() ? 0 : rep.classes_exceeding.back();
    return rep;
  }

 private:
  int find(int i) {
    while (parent_[static_cast<std::size_t>(i)] != i) {
      parent_[static_cast<std::size_t>(i)] =
          parent_[static_cast<std::size_t>(parent_[static_cast<std::size_t>(i)])];
      i = parent_[static_cast<std::size_t>(i)];
    }
    return i;
  }

  // Merge two class roots that now share edge `at`; returns the surviving root.
  int merge(int a, int b, int at) {
    if (origin_count_[static_cast<std::size_t>(a)] < origin_count_[static_cast<std::size_t>(b)])
      std::swap(a, b);
    parent_[static_cast<std::size_t>(b)] = a;
    origin_count_[static_cast<std::size_t>(a)] += origin_count_[static_cast<std::size_t>(b)];
    max_gap_[static_cast<std::size_t>(a)] =
        std::max(max_gap_[static_cast<std::size_t>(a)], max_gap_[static_cast<std::size_t>(b)]);
    touch_count_[static_cast<std::size_t>(a)] = std::max(
        touch_count_[static_cast<std::size_t>(a)], touch_count_[static_cast<std::size_t>(b)]);
    position_[static_cast<std::size_t>(a)] = at;
    return a;
  }

  std::vector<int> origin_edges_;
  int history_stride_;
  std::vector<int> class_at_edge_;
  std::vector<int> parent_;
  std::vector<int> position_;
  std::vector<double> max_gap_;
  std::vector<int> origin_count_;
  std::vector<long long> touch_count_;
  std::vector<TrackerHistoryRow> history_;
};

}  // namespace opdyn
