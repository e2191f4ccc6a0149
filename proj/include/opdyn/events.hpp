#pragma once

#include <span>
#include <stdexcept>
#include <vector>

#include "opdyn/rng.hpp"

namespace opdyn {

struct Event {
  double time;
  int edge;
};

// Superposed realization of one independent rate-1 clock per edge: global
// inter-arrival times are exponential with rate edge_count, marks are uniform
// over edges and independent of the times. Event times are strictly
// increasing; the zero-probability tie is broken by regenerating.
class EventStream {
 public:
  EventStream(int edge_count, Rng rng) : edge_count_(edge_count), rng_(rng) {
    if (edge_count < 1) throw std::invalid_argument("event stream needs at least one edge");
  }

  Event next() {
    double t;
    do {
      t = time_ + rng_.exponential(static_cast<double>(edge_count_));
    } while (t <= time_);
    time_ = t;
    return {time_, rng_.below_int(edge_count_)};
  }

  double current_time() const { return time_; }
  int edge_count() const { return edge_count_; }

 private:
  int edge_count_;
  double time_ = 0.0;
  Rng rng_;
};

// Number of events on `edge` with time in [t_begin, t_end).
inline long long count_interactions(std::span<const Event> trace, int edge, double t_begin,
                                    double t_end) {
  long long n = 0;
  for (const Event& ev : trace)
    if (ev.edge == edge && ev.time >= t_begin && ev.time < t_end) ++n;
  return n;
}

}  // namespace opdyn
