#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <map>
#include <vector>

#include "opdyn/simulation.hpp"
#include "opdyn/tracker.hpp"

using namespace opdyn;
using Catch::Approx;

namespace {
OpinionLattice flat_ring(int n) { return OpinionLattice(std::vector<double>(n, 0.0), Boundary::ring); }
}  // namespace

TEST_CASE("trackers start as singleton classes on their origins", "[tracker]") {
  OpinionLattice lat = flat_ring(10);
  std::vector<int> all(10);
  for (int i = 0; i < 10; ++i) all[static_cast<std::size_t>(i)] = i;
  TrackerSet full(all, lat);
  CHECK(full.live_class_count() == 10);
  for (int i = 0; i < 10; ++i) CHECK(full.position(full.root_of(i)) == i);

  TrackerSet one({4}, lat);
  CHECK(one.live_class_count() == 1);
  CHECK(one.position(0) == 4);

  CHECK_THROWS_AS(TrackerSet({2, 2}, lat), std::invalid_argument);
  CHECK_THROWS_AS(TrackerSet({10}, lat), std::invalid_argument);
  CHECK_THROWS_AS(TrackerSet({}, lat), std::invalid_argument);
}

TEST_CASE("tracker ignores events beyond its window", "[tracker]") {
  OpinionLattice lat = flat_ring(12);
  TrackerSet t({2}, lat);
  t.on_event({0.5, 5}, lat);  // distance 3 from edge 2
  CHECK(t.position(t.root_of(0)) == 2);
  t.on_event({0.6, 4}, lat);  // distance 2: still outside the window
  CHECK(t.position(t.root_of(0)) == 2);
}

TEST_CASE("tracker jumps to the largest gap in its window", "[tracker]") {
  // gaps around edge 5: (1.0, 5.0, 2.0) at edges (4, 5, 6)
  std::vector<double> ops(12, 0.0);
  ops[4] = 0.0;
  ops[5] = 1.0;   // gap(4) = 1
  ops[6] = -4.0;  // gap(5) = 5
  ops[7] = -2.0;  // gap(6) = 2
  OpinionLattice lat(ops, Boundary::ring);
  TrackerSet t({5}, lat);
  t.on_event({0.1, 5}, lat);
  CHECK(t.position(t.root_of(0)) == 5);

  // shuffle so the maximum moves to edge 6
  lat.set_opinion(7, 8.0);  // gap(6) = 12
  t.on_event({0.2, 6}, lat);
  CHECK(t.position(t.root_of(0)) == 6);
}

TEST_CASE("argmax ties prefer the current edge then the smaller index", "[tracker]") {
  // equal gaps of 1 at edges 2, 3, 4; tracker on 3 stays put
  OpinionLattice lat({0.0, 0.0, 1.0, 0.0, 1.0, 0.0, 0.0, 0.0}, Boundary::ring);
  CHECK(lat.gap(2) == lat.gap(3));
  CHECK(lat.gap(3) == lat.gap(4));
  TrackerSet t({3}, lat);
  t.on_event({0.1, 3}, lat);
  CHECK(t.position(t.root_of(0)) == 3);

  // tracker on 2 with gap(1) == gap(3) == 1 > gap(2) == 0: smaller index wins
  OpinionLattice lat2({0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0}, Boundary::ring);
  CHECK(lat2.gap(1) == 1.0);
  CHECK(lat2.gap(2) == 0.0);
  CHECK(lat2.gap(3) == 1.0);
  TrackerSet u({2}, lat2);
  u.on_event({0.2, 2}, lat2);
  CHECK(u.position(u.root_of(0)) == 1);
}

TEST_CASE("trackers landing on the same edge coalesce for good", "[tracker]") {
  std::vector<double> ops(10, 0.0);
  ops[5] = 10.0;  // gaps: edge 4 = 10, edge 5 = 10
  OpinionLattice lat(ops, Boundary::ring);
  TrackerSet t({3, 5}, lat);
  // event on edge 4 touches both trackers; window maxima: from 3 -> 4, from 5 -> 4 or 5
  lat.apply(4, lat.interact_on(4, ModelParams::validated(1.0, 0.5, 0.25)));
  t.on_event({0.3, 4}, lat);
  const int r0 = t.root_of(0), r1 = t.root_of(1);
  CHECK(r0 == r1);
  CHECK(t.live_class_count() == 1);

  // once merged, classes share every later move
  for (int k = 0; k < 20; ++k) {
    const int e = (k * 3) % lat.edge_count();
    lat.apply(e, lat.interact_on(e, ModelParams::validated(1.0, 0.5, 0.25)));
    t.on_event({0.4 + k * 0.01, e}, lat);
    REQUIRE(t.root_of(0) == t.root_of(1));
  }
}

TEST_CASE("divergence stats without events report initial gaps", "[tracker][stats]") {
  std::vector<double> ops = {0.0, 1.0, -0.5, 2.0, 0.0, 0.0};
  OpinionLattice lat(ops, Boundary::segment);
  TrackerSet t({0, 2, 4}, lat);
  const std::vector<double> thresholds = {1.0, 2.0};
  const DivergenceReport rep = t.divergence_stats(lat, thresholds);
  REQUIRE(rep.classes.size() == 3);
  CHECK(rep.classes[0].max_gap == Approx(1.0));
  CHECK(rep.classes[1].max_gap == Approx(2.5));
  CHECK(rep.classes[2].max_gap == Approx(0.0));
  CHECK(rep.classes_exceeding[0] == 1);  // only the 2.5 gap exceeds 1.0
  CHECK(rep.classes_exceeding[1] == 1);
  CHECK(rep.top_exceeding == 1);

  const DivergenceReport bare = t.divergence_stats(lat, {});
  CHECK(bare.top_exceeding == 0);
  CHECK(bare.classes.size() == 3);
}

TEST_CASE("simulation keeps the live invariants and conserves the sum", "[tracker][simulation]") {
  const ModelParams p = ModelParams::validated(1.0, 0.5, 0.25);
  Rng init(replica_seed(2024, 0));
  OpinionLattice lat = OpinionLattice::random_uniform(200, Boundary::ring, init);
  SimulationOptions opt;
  opt.t_max = 50.0;
  opt.sample_dt = 5.0;
  opt.record_events = true;
  LatticeSimulation sim(p, std::move(lat), Rng(replica_seed(2024, 1)), opt);
  const SimulationResult res = sim.run();
  CHECK(res.events > 0);
  CHECK(res.conservation_drift <= 1e-9);
  CHECK(res.series.size() == 11);
  CHECK(res.series.front().t == 0.0);
  CHECK(res.series.back().t == Approx(50.0));
  CHECK(static_cast<long long>(res.event_trace.size()) == res.events);
  // tracked classes only ever merged
  CHECK(sim.trackers().live_class_count() <= sim.trackers().origin_count());
  // history rows carry valid positions
  for (const TrackerHistoryRow& row : sim.trackers().history()) {
    REQUIRE(row.edge >= 0);
    REQUIRE(row.edge < 200);
    REQUIRE(row.gap >= 0.0);
  }
}

TEST_CASE("default origins cover every edge up to 4096, strided above", "[tracker]") {
  CHECK(default_tracker_origins(10, 0).size() == 10);
  CHECK(default_tracker_origins(4096, 0).size() == 4096);
  const std::vector<int> strided = default_tracker_origins(10000, 0);
  CHECK(strided.size() == 3334);  // ceil(10000/4096) = 3 -> edges 0, 3, 6, ...
  CHECK(strided[1] == 3);
  const std::vector<int> manual = default_tracker_origins(100, 10);
  CHECK(manual.size() == 10);
  CHECK(manual[9] == 90);
}

TEST_CASE("non-finite opinions abort with the offending time", "[tracker][simulation]") {
  const ModelParams p = ModelParams::validated(1.0, 0.5, 0.5);
  // every interaction doubles a gap of order 1e300; overflow within a few events
  OpinionLattice lat({1e300, -1e300, 1e300, -1e300}, Boundary::ring);
  SimulationOptions opt;
  opt.t_max = 20.0;
  opt.check_invariants = false;
  LatticeSimulation sim(p, std::move(lat), Rng(1), opt);
  CHECK_THROWS_AS(sim.run(), NumericalError);
}

TEST_CASE("segment simulation runs with clipped windows and conserved sum",
          "[tracker][simulation]") {
  const ModelParams p = ModelParams::validated(1.0, 0.5, 0.25);
  Rng init(replica_seed(77, 0));
  OpinionLattice lat = OpinionLattice::random_uniform(50, Boundary::segment, init);
  SimulationOptions opt;
  opt.t_max = 30.0;
  LatticeSimulation sim(p, std::move(lat), Rng(replica_seed(77, 1)), opt);
  const SimulationResult res = sim.run();
  CHECK(res.events > 0);
  CHECK(res.conservation_drift <= 1e-9);
}

TEST_CASE("classic limit runs with trackers and bounded opinions",
          "[tracker][simulation]") {
  const ModelParams p = ModelParams::validated(0.5, 0.5, 0.0);
  Rng init(replica_seed(78, 0));
  OpinionLattice lat = OpinionLattice::random_uniform(100, Boundary::ring, init);
  SimulationOptions opt;
  opt.t_max = 50.0;
  LatticeSimulation sim(p, std::move(lat), Rng(replica_seed(78, 1)), opt);
  sim.run();
  for (double x : sim.lattice().opinions()) {
    REQUIRE(x >= -1.0);
    REQUIRE(x <= 1.0);
  }
}

TEST_CASE("segment ends clip the tracker window", "[tracker]") {
  std::vector<double> ops = {0.0, 3.0, 0.0, 0.0, 0.0};
  OpinionLattice lat(ops, Boundary::segment);
  TrackerSet t({0}, lat);
  t.on_event({0.1, 0}, lat);  // window is just {0, 1}
  CHECK(t.position(t.root_of(0)) == 0);
  lat.set_opinion(2, 9.0);  // gap(1) = 6, gap(2) = 9
  t.on_event({0.2, 1}, lat);
  CHECK(t.position(t.root_of(0)) == 1);
}
