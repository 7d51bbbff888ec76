#include "commute/routing.hpp"
#include "commute/synth.hpp"

#include "test_support.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>
#include <numeric>

using namespace commute;

namespace {

RoadNetwork path_abc()
{
  return RoadNetwork({{1, {0, 0}}, {2, {1, 0}}, {3, {3, 0}}}, {{1, 2, 1.0, true}, {2, 3, 2.0, true}});
}

}  // namespace

TEST_CASE("snapping")
{
  const RoadNetwork two({{1, {0, 0}}, {2, {1, 0}}}, {});
  const auto a = snap({0.4, 0}, two);
  CHECK(a.node == 0);
  CHECK(a.snap_distance == doctest::Approx(0.4));
  const auto b = snap({1, 0}, two);
  CHECK(b.node == 1);
  CHECK(b.snap_distance == 0.0);
  // Equidistant: lowest node id wins.
  CHECK(snap({0.5, 3}, two).node == 0);
  CHECK_THROWS_AS(snap({0, 0}, RoadNetwork()), std::invalid_argument);
}

TEST_CASE("grid index agrees with a brute-force scan")
{
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const RoadNetwork net = testing::random_graph(300, 2.0, seed);
    const SnapIndex index(net);
    RandomStream rng(seed * 17);
    for (int q = 0; q < 1000; ++q) {
      const Point p{rng.uniform() * 14.0 - 2.0, rng.uniform() * 14.0 - 2.0};
      std::size_t best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < net.node_count(); ++i) {
        const double d = euclidean(p, net.node(i).position);
        if (d < best_d) {
          best_d = d;
          best = i;
        }
      }
      const auto got = index.nearest(p);
      CHECK(got.node == best);
      CHECK(got.snap_distance == best_d);
    }
  }
}

TEST_CASE("dijkstra on a path")
{
  const RoadNetwork net = path_abc();
  const std::vector<std::size_t> c{2};
  CHECK(*shortest_distances(net, 0, c).distances[0] == 3.0);
  const std::vector<std::size_t> self{0};
  CHECK(*shortest_distances(net, 0, self).distances[0] == 0.0);
}

TEST_CASE("dijkstra equals all-pairs oracle on random graphs")
{
  for (std::uint64_t seed = 1; seed <= 60; ++seed) {
    const std::size_t n = 2 + seed % 49;
    const RoadNetwork net = testing::random_graph(n, 1.0 + static_cast<double>(seed % 4), seed);
    const auto oracle = synth::oracle_all_pairs(net);
    std::vector<std::size_t> all(n);
    std::iota(all.begin(), all.end(), std::size_t{0});
    DijkstraWorkspace ws(net);
    for (std::size_t s = 0; s < n; ++s) {
      const auto batch = ws.run(s, all);
      for (std::size_t t = 0; t < n; ++t) {
        if (std::isinf(oracle[s][t])) {
          CHECK_FALSE(batch.distances[t].has_value());
        } else {
          REQUIRE(batch.distances[t].has_value());
          CHECK(std::abs(*batch.distances[t] - oracle[s][t]) <= 1e-9);
        }
      }
    }
  }
}

TEST_CASE("distances are symmetric on bidirectional networks")
{
  synth::ScenarioConfig cfg;
  cfg.zones_x = 3;
  cfg.zones_y = 2;
  cfg.nodes_per_zone_side = 3;
  const auto s = synth::generate_scenario(cfg);
  const auto d = synth::oracle_all_pairs(s.network);
  for (std::size_t i = 0; i < d.size(); ++i) {
    for (std::size_t j = 0; j < d.size(); ++j) CHECK(std::abs(d[i][j] - d[j][i]) <= 1e-9);
  }
}

TEST_CASE("trip measurement")
{
  const RoadNetwork net = path_abc();
  TripSet trips;
  trips.trips.push_back({1, 0, 0, {0.5, 0.5}, {0.5, 0.5}, std::nullopt, false});
  trips.trips.push_back({2, 0, 1, {0, 0.1}, {3, -0.2}, std::nullopt, false});
  const auto off = measure_trips(trips, net, SnapLegs::off);
  CHECK(*off.trips.trips[0].distance == 0.0);
  CHECK(*off.trips.trips[1].distance == 3.0);
  const auto on = measure_trips(trips, net, SnapLegs::on);
  CHECK(*on.trips.trips[1].distance == doctest::Approx(3.3).epsilon(1e-12));

  // Disconnected: straight-line fallback with the flag set.
  const RoadNetwork split({{1, {0, 0}}, {2, {10, 0}}}, {});
  TripSet far;
  far.trips.push_back({1, 0, 1, {0, 0}, {10, 0}, std::nullopt, false});
  const auto m = measure_trips(far, split);
  CHECK(m.trips.trips[0].unreachable);
  CHECK(*m.trips.trips[0].distance == 10.0);
  CHECK(m.counters.unreachable_trips == 1);
}

TEST_CASE("batched measurement equals per-trip recomputation")
{
  synth::ScenarioConfig cfg;
  cfg.zones_x = 3;
  cfg.zones_y = 3;
  cfg.commuters = 2000;
  cfg.job_clustering = 0.5;
  const auto s = synth::generate_scenario(cfg);
  const auto counts = apportion_trip_counts(s.od, s.od.total());
  const auto supports = build_supports(s.zones, counts, s.residential_mask, s.job_mask, 0.1);
  const TripSet trips = pair_trips(counts, supports, 5);
  const auto measured = measure_trips(trips, s.network, SnapLegs::on, 3);
  const auto single = measure_trips(trips, s.network, SnapLegs::on, 1);
  CHECK(measured.trips.trips == single.trips.trips);
  CHECK(measured.counters.dijkstra_runs <= measured.counters.distinct_origin_nodes);

  for (const auto& t : measured.trips.trips) {
    const auto so = snap(t.origin, s.network);
    const auto sd = snap(t.dest, s.network);
    const std::vector<std::size_t> target{sd.node};
    const auto d = shortest_distances(s.network, so.node, target).distances[0];
    REQUIRE(d);
    CHECK(*t.distance == *d + (so.snap_distance + sd.snap_distance));
  }

  const auto off = measure_trips(trips, s.network, SnapLegs::off, 2);
  for (std::size_t k = 0; k < trips.trips.size(); ++k) CHECK(*off.trips.trips[k].distance <= *measured.trips.trips[k].distance);
}
