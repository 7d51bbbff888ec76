#include "commute/synth.hpp"
#include "commute/text_io.hpp"

#include "test_support.hpp"

#include <doctest.h>

#include <cmath>

using namespace commute;

TEST_CASE("small uniform scenario")
{
  synth::ScenarioConfig cfg;
  cfg.zones_x = 2;
  cfg.zones_y = 2;
  cfg.commuters = 100;
  const auto s = synth::generate_scenario(cfg);
  CHECK(s.zones.size() == 4);
  CHECK(s.od.total() == 100);
  CHECK(validate_consistency(s.zones, s.od, Strictness::strict).empty());
  for (std::size_t r = 0; r < s.residential_mask.nrows(); ++r) {
    for (std::size_t c = 0; c < s.residential_mask.ncols(); ++c) {
      CHECK(s.residential_mask.weight(r, c) == 1.0);
      CHECK(s.job_mask.weight(r, c) == 1.0);
    }
  }
}

TEST_CASE("full clustering leaves one job cell per zone")
{
  synth::ScenarioConfig cfg;
  cfg.zones_x = 3;
  cfg.zones_y = 2;
  cfg.job_clustering = 1.0;
  const auto s = synth::generate_scenario(cfg);
  for (std::size_t z = 0; z < s.zones.size(); ++z) {
    std::size_t cells = 0;
    for (std::size_t r = 0; r < s.job_mask.nrows(); ++r) {
      for (std::size_t c = 0; c < s.job_mask.ncols(); ++c) {
        if (s.job_mask.weight(r, c) > 0 && contains(s.zones[z].shape, s.job_mask.cell_center(r, c))) ++cells;
      }
    }
    CHECK(cells == (s.zones[z].jobs > 0 ? 1u : 0u));
  }
}

TEST_CASE("margins are consistent by construction")
{
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    synth::ScenarioConfig cfg;
    cfg.zones_x = 2 + seed % 4;
    cfg.zones_y = 1 + seed % 3;
    cfg.commuters = static_cast<std::int64_t>(50 + 997 * seed);
    cfg.seed = seed;
    cfg.shape = static_cast<synth::WageShape>(seed % 3);
    cfg.job_clustering = 0.1 * static_cast<double>(seed % 11);
    cfg.residential_variation = 0.05 * static_cast<double>(seed);
    const auto s = synth::generate_scenario(cfg);
    CHECK(s.od.total() == cfg.commuters);
    CHECK(validate_consistency(s.zones, s.od, Strictness::strict).empty());
    for (const auto& z : s.zones.zones()) {
      std::int64_t bins = 0;
      std::int64_t modes = 0;
      for (const auto b : z.wage_bins) bins += b;
      for (const auto m : z.mode_counts) modes += m;
      CHECK(bins == z.resident_workers);
      CHECK(modes == z.resident_workers);
    }
  }
}

TEST_CASE("grid network combinatorics")
{
  for (std::size_t k : {1u, 2u, 3u, 5u}) {
    synth::ScenarioConfig cfg;
    cfg.zones_x = 1;
    cfg.zones_y = 1;
    cfg.nodes_per_zone_side = k;
    cfg.commuters = 10;
    const auto s = synth::generate_scenario(cfg);
    CHECK(s.network.node_count() == k * k);
    CHECK(s.network.arc_count() == 2 * 2 * k * (k - 1));
  }
}

TEST_CASE("convex scenario has a single-peaked ground truth")
{
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    synth::ScenarioConfig cfg;
    cfg.shape = synth::WageShape::convex;
    cfg.seed = seed;
    const auto s = synth::generate_scenario(cfg);
    REQUIRE(s.zones.size() == 25);
    const auto& q = s.expected_quintile_distance;
    CHECK(q[0] < q[1]);
    CHECK(q[1] < q[2]);
    CHECK(q[2] > q[3]);
    CHECK(q[3] > q[4]);
  }
  synth::ScenarioConfig cfg;
  cfg.shape = synth::WageShape::convex;
  cfg.peak_group = 3;
  const auto s = synth::generate_scenario(cfg);
  const auto& q = s.expected_quintile_distance;
  CHECK(q[3] > q[2]);
  CHECK(q[3] > q[4]);
}

TEST_CASE("generator determinism and config round-trip")
{
  synth::ScenarioConfig cfg;
  cfg.zones_x = 3;
  cfg.zones_y = 3;
  cfg.shape = synth::WageShape::monotone;
  cfg.job_clustering = 0.3;
  cfg.seed = 0xFFFFFFFFFFFFFFFFULL;
  CHECK(synth::config_to_json(synth::config_from_json(synth::config_to_json(cfg))) == synth::config_to_json(cfg));

  testing::TempDir a("synth-a");
  testing::TempDir b("synth-b");
  synth::write_scenario(a.path(), synth::generate_scenario(cfg));
  synth::write_scenario(b.path(), synth::generate_scenario(cfg));
  for (const char* f : {"zones.geojson", "od.csv", "nodes.csv", "edges.csv", "residential.asc", "jobs.asc",
                        "crosswalk.csv", "scenario.json", "run.json"}) {
    CHECK_MESSAGE(text::read_file(a / f) == text::read_file(b / f), f);
  }
}

TEST_CASE("infeasible configs are refused")
{
  synth::ScenarioConfig cfg;
  cfg.job_clustering = 1.5;
  CHECK_THROWS_AS(synth::generate_scenario(cfg), std::invalid_argument);
  cfg = {};
  cfg.zones_x = 0;
  CHECK_THROWS_AS(synth::generate_scenario(cfg), std::invalid_argument);
  cfg = {};
  cfg.commuters = 0;
  CHECK_THROWS_AS(synth::generate_scenario(cfg), std::invalid_argument);
  CHECK_THROWS(synth::config_from_json("{\"shape\":\"wavy\"}"));
}

TEST_CASE("all-pairs oracle")
{
  const RoadNetwork tri({{1, {0, 0}}, {2, {1, 0}}, {3, {2, 0}}},
                        {{1, 2, 1.0, true}, {2, 3, 1.0, true}, {1, 3, 3.0, true}});
  const auto d = synth::oracle_all_pairs(tri);
  CHECK(d[0][2] == 2.0);

  const RoadNetwork apart({{1, {0, 0}}, {2, {1, 0}}}, {});
  CHECK(std::isinf(synth::oracle_all_pairs(apart)[0][1]));

  std::vector<RoadNode> many;
  for (int i = 0; i < 201; ++i) many.push_back({i, {static_cast<double>(i), 0}});
  CHECK_THROWS_AS(synth::oracle_all_pairs(RoadNetwork(many, {})), std::invalid_argument);
}

TEST_CASE("least-squares oracle refuses rank deficiency")
{
  std::vector<std::vector<double>> cols{{1, 1, 1}, {2, 2, 2}};
  CHECK_THROWS_AS(synth::oracle_ols(cols, std::vector<double>{1, 2, 3}, {}), std::domain_error);
}
