#include "commute/metrics.hpp"
#include "commute/routing.hpp"
#include "commute/synth.hpp"
#include "commute/text_io.hpp"

#include "test_support.hpp"

#include <doctest.h>

#include <cmath>
#include <map>

using namespace commute;

TEST_CASE("mean commute time")
{
  const ZoneSet zones({testing::make_zone("A", 0, 0, 1, 40, 0), testing::make_zone("B", 1, 0, 1, 0, 10),
                       testing::make_zone("C", 2, 0, 1, 0, 30)},
                      "miles");
  const ODMatrix od({{0, 1, 10, 10.0}, {0, 2, 30, 20.0}}, 3);
  const auto t = mean_commute_time(od, zones);
  CHECK(*t[0].mean_time == doctest::Approx(17.5));
  CHECK(*t[0].coverage_pct == 100.0);
  CHECK_FALSE(t[1].mean_time.has_value());

  const ODMatrix single({{0, 1, 40, 12.5}}, 3);
  CHECK(*mean_commute_time(single, zones)[0].mean_time == 12.5);

  const ODMatrix partial({{0, 1, 10, 10.0}, {0, 2, 30, std::nullopt}}, 3);
  const auto p = mean_commute_time(partial, zones);
  CHECK(*p[0].mean_time == 10.0);
  CHECK(*p[0].coverage_pct == 25.0);
  CHECK(*mean_commute_time(partial, zones, TimeDenominator::declared_workers)[0].mean_time == 2.5);
}

TEST_CASE("mean commute distance")
{
  const ZoneSet zones({testing::make_zone("A", 0, 0, 1, 2, 2), testing::make_zone("B", 1, 0, 1, 0, 0)}, "miles");
  TripSet trips;
  trips.trips.push_back({1, 0, 0, {}, {}, 3.0, false});
  trips.trips.push_back({2, 0, 0, {}, {}, 5.0, false});
  const auto d = mean_commute_distance(trips, zones);
  CHECK(*d[0].mean_distance == 4.0);
  CHECK(d[0].trips == 2);
  CHECK_FALSE(d[1].mean_distance.has_value());
  CHECK(*global_mean_distance(trips) == 4.0);

  trips.trips.push_back({3, 0, 0, {}, {}, std::nullopt, false});
  CHECK_THROWS_AS(mean_commute_distance(trips, zones), std::invalid_argument);
}

TEST_CASE("zone mean equals the flow-weighted mean of pair means")
{
  synth::ScenarioConfig cfg;
  cfg.zones_x = 4;
  cfg.zones_y = 3;
  cfg.commuters = 6000;
  cfg.job_clustering = 0.4;
  const auto s = synth::generate_scenario(cfg);
  const auto counts = apportion_trip_counts(s.od, 4321);
  const auto supports = build_supports(s.zones, counts, s.residential_mask, s.job_mask, 0.1);
  const auto measured = measure_trips(pair_trips(counts, supports, 77), s.network);
  const TripSet& trips = measured.trips;

  const auto zone_means = mean_commute_distance(trips, s.zones);
  std::map<std::pair<std::size_t, std::size_t>, std::pair<double, std::int64_t>> pair;
  for (const auto& t : trips.trips) {
    auto& p = pair[{t.origin_zone, t.dest_zone}];
    p.first += *t.distance;
    ++p.second;
  }
  std::vector<OdFlow> flows;
  for (const auto& [key, v] : pair) flows.push_back({key.first, key.second, v.second, v.first / static_cast<double>(v.second)});
  const auto eq1 = mean_commute_time(ODMatrix(flows, s.zones.size()), s.zones);
  for (std::size_t i = 0; i < s.zones.size(); ++i) {
    REQUIRE(zone_means[i].mean_distance.has_value() == eq1[i].mean_time.has_value());
    if (zone_means[i].mean_distance) CHECK(std::abs(*zone_means[i].mean_distance - *eq1[i].mean_time) < 1e-12);
  }

  // Global mean is the trip-weighted mean of zone means.
  double weighted = 0;
  for (const auto& z : zone_means) {
    if (z.mean_distance) weighted += *z.mean_distance * static_cast<double>(z.trips);
  }
  CHECK(std::abs(weighted / static_cast<double>(trips.trips.size()) - *global_mean_distance(trips)) < 1e-12);
}

TEST_CASE("centroid baseline")
{
  const RoadNetwork net({{1, {0.5, 0.5}}, {2, {1.5, 0.5}}, {3, {3.5, 0.5}}},
                        {{1, 2, 1.0, true}, {2, 3, 2.0, true}});
  const ZoneSet zones({testing::make_zone("A", 0, 0, 1, 5, 5), testing::make_zone("B", 3, 0, 1, 0, 1)}, "miles");
  const auto intra = centroid_baseline(zones, ODMatrix({{0, 0, 5, std::nullopt}}, 2), net);
  CHECK(*intra[0] == 0.0);
  CHECK_FALSE(intra[1].has_value());
  const auto cross = centroid_baseline(zones, ODMatrix({{0, 1, 1, std::nullopt}}, 2), net);
  CHECK(*cross[0] == 3.0);
}

TEST_CASE("clustered jobs: intrazonal trips are positive while the baseline is zero")
{
  synth::ScenarioConfig cfg;
  cfg.zones_x = 3;
  cfg.zones_y = 3;
  cfg.commuters = 3000;
  cfg.job_clustering = 1.0;
  const auto s = synth::generate_scenario(cfg);
  const auto counts = apportion_trip_counts(s.od, s.od.total());
  const auto supports = build_supports(s.zones, counts, s.residential_mask, s.job_mask, 0.1);
  const auto measured = measure_trips(pair_trips(counts, supports, 1), s.network);
  double sum = 0;
  std::size_t n = 0;
  for (const auto& t : measured.trips.trips) {
    if (t.origin_zone != t.dest_zone) continue;
    sum += *t.distance;
    ++n;
  }
  REQUIRE(n > 0);
  CHECK(sum / static_cast<double>(n) > 0.0);

  std::vector<OdFlow> intra;
  for (const auto& f : s.od.flows()) {
    if (f.origin == f.dest) intra.push_back(f);
  }
  const auto base = centroid_baseline(s.zones, ODMatrix(intra, s.zones.size()), s.network);
  for (const auto& b : base) {
    if (b) CHECK(*b == 0.0);
  }
}

TEST_CASE("modal split")
{
  Zone a = testing::make_zone("A", 0, 0, 1, 100, 0);
  a.mode_counts = {80, 10, 5, 5};
  Zone b = testing::make_zone("B", 1, 0, 1, 100, 0);
  b.mode_counts = {60, 20, 10, 10};
  Zone c = testing::make_zone("C", 2, 0, 1, 0, 0);
  const ZoneSet zones({a, b, c}, "miles");
  const auto rows = modal_split(zones, {"g", "g", "g"});
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].group == "g");
  CHECK(rows[0].percent[0] == doctest::Approx(70.0));
  CHECK(rows[0].zones == 2);
  CHECK(rows[1].group == "All");
  for (const auto& r : rows) {
    double total = 0;
    for (const double p : r.percent) total += p;
    CHECK(std::abs(total - 100.0) < 1e-9);
  }

  Zone only = testing::make_zone("O", 0, 0, 1, 7, 0);
  only.mode_counts = {0, 0, 7, 0};
  const auto single = modal_split(ZoneSet({only}, "miles"), {"x"});
  CHECK(single[0].percent[2] == 100.0);
  CHECK(modal_split_csv(single).rfind("group,pct_drove_alone,pct_carpool,pct_transit,pct_other,commuters,zones\n", 0) == 0);
}

TEST_CASE("zone metrics csv round-trip")
{
  std::vector<ZoneMetrics> rows(2);
  rows[0] = {"A", 1.0 / 3.0, 12.5, 7, 0.0, 100.0};
  rows[1] = {"B", std::nullopt, std::nullopt, 0, std::nullopt, std::nullopt};
  testing::TempDir dir("zm");
  text::write_file(dir / "zm.csv", zone_metrics_csv(rows));
  const auto back = read_zone_metrics(dir / "zm.csv");
  REQUIRE(back.size() == 2);
  CHECK(back[0].mean_distance == rows[0].mean_distance);
  CHECK(back[0].trips == 7);
  CHECK_FALSE(back[1].mean_distance.has_value());
}
