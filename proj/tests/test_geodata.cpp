#include "commute/geodata.hpp"
#include "commute/synth.hpp"
#include "commute/text_io.hpp"

#include "test_support.hpp"

#include <doctest.h>

#include <algorithm>

using namespace commute;

namespace {

std::string feature(const std::string& id, double x0, int workers, int jobs, const std::string& extra = "",
                    bool with_jobs = true)
{
  std::string props = "\"id\":\"" + id + "\",\"workers\":" + std::to_string(workers);
  if (with_jobs) props += ",\"jobs\":" + std::to_string(jobs);
  props += ",\"mean_wage\":30000,\"wage_lt15k\":1,\"wage_15_35k\":1,\"wage_35_50k\":0,\"wage_50_75k\":0,"
           "\"wage_gt75k\":0,\"mode_drove\":2,\"mode_carpool\":0,\"mode_transit\":0,\"mode_other\":0" +
           extra;
  const std::string x1 = std::to_string(x0 + 1);
  const std::string xs = std::to_string(x0);
  return "{\"type\":\"Feature\",\"properties\":{" + props +
         "},\"geometry\":{\"type\":\"Polygon\",\"coordinates\":[[[" + xs + ",0],[" + x1 + ",0],[" + x1 + ",1],[" + xs +
         ",1],[" + xs + ",0]]]}}";
}

std::string collection(const std::vector<std::string>& features)
{
  std::string out = "{\"type\":\"FeatureCollection\",\"features\":[";
  for (std::size_t i = 0; i < features.size(); ++i) out += (i ? "," : "") + features[i];
  return out + "]}";
}

ZoneSet two_zones()
{
  std::vector<Zone> zs{testing::make_zone("A", 0, 0, 1, 5, 3), testing::make_zone("B", 1, 0, 1, 0, 2)};
  return ZoneSet(std::move(zs), "miles");
}

bool has_code(const std::vector<Finding>& findings, const std::string& code)
{
  return std::any_of(findings.begin(), findings.end(), [&](const Finding& f) { return f.code == code; });
}

}  // namespace

TEST_CASE("zones load in id order")
{
  testing::TempDir dir("zones");
  text::write_file(dir / "z.geojson", collection({feature("Z2", 1, 2, 2), feature("Z1", 0, 2, 2)}));
  const ZoneSet zones = load_zones(dir / "z.geojson");
  REQUIRE(zones.size() == 2);
  CHECK(zones[0].id == "Z1");
  CHECK(zones[1].id == "Z2");
  CHECK(zones.find("Z2") == 1u);
  CHECK(zones[0].wage_bins[0] == 1);
  CHECK(zones[0].mean_wage == 30000.0);
}

TEST_CASE("zone schema violations name the zone")
{
  testing::TempDir dir("zones-bad");
  text::write_file(dir / "z.geojson", collection({feature("Z1", 0, 2, 2), feature("Z7", 1, 2, 2, "", false)}));
  try {
    load_zones(dir / "z.geojson");
    FAIL("expected DataError");
  } catch (const DataError& e) {
    REQUIRE(has_code(e.findings(), "missing_property"));
    CHECK(std::string(e.what()).find("Z7") != std::string::npos);
    CHECK(e.findings().front().ids == std::vector<std::string>{"Z7"});
  }

  text::write_file(dir / "dup.geojson", collection({feature("Z1", 0, 2, 2), feature("Z1", 1, 2, 2)}));
  CHECK_THROWS_AS(load_zones(dir / "dup.geojson"), DataError);

  text::write_file(dir / "neg.geojson", collection({feature("Z1", 0, -2, 2)}));
  CHECK_THROWS_AS(load_zones(dir / "neg.geojson"), DataError);

  text::write_file(dir / "junk.geojson", "{not json");
  CHECK_THROWS_AS(load_zones(dir / "junk.geojson"), DataError);

  std::string open = feature("Z1", 0, 2, 2);
  open.replace(open.rfind(",[0.000000,0]"), std::string(",[0.000000,0]").size(), "");
  text::write_file(dir / "open.geojson", collection({open}));
  try {
    load_zones(dir / "open.geojson");
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(has_code(e.findings(), "unclosed_ring"));
  }
}

TEST_CASE("od loading")
{
  testing::TempDir dir("od");
  const ZoneSet zones = two_zones();
  text::write_file(dir / "od.csv", "origin_id,dest_id,commuters,mean_time_min\nA,A,3,5.0\nA,B,2,10.0\n");
  const ODMatrix od = load_od(dir / "od.csv", zones);
  CHECK(od.total() == 5);
  CHECK(od.find(0, 1)->mean_time_min == 10.0);
  CHECK(od.row_sums() == std::vector<std::int64_t>{5, 0});
  CHECK(od.column_sums() == std::vector<std::int64_t>{3, 2});

  text::write_file(dir / "unknown.csv", "origin_id,dest_id,commuters,mean_time_min\nA,Z9,3,\n");
  CHECK_THROWS_AS(load_od(dir / "unknown.csv", zones), DataError);
  text::write_file(dir / "neg.csv", "origin_id,dest_id,commuters,mean_time_min\nA,B,-3,\n");
  CHECK_THROWS_AS(load_od(dir / "neg.csv", zones), DataError);
  text::write_file(dir / "dup.csv", "origin_id,dest_id,commuters,mean_time_min\nA,B,3,\nA,B,1,\n");
  CHECK_THROWS_AS(load_od(dir / "dup.csv", zones), DataError);

  text::write_file(dir / "blank.csv", "origin_id,dest_id,commuters,mean_time_min\nA,B,3,\n");
  CHECK_FALSE(load_od(dir / "blank.csv", zones).find(0, 1)->mean_time_min.has_value());
}

TEST_CASE("network loading")
{
  testing::TempDir dir("net");
  text::write_file(dir / "n.csv", "node_id,x,y\n1,0,0\n2,1,0\n3,2,0\n");
  text::write_file(dir / "e.csv", "from_node,to_node,length,bidirectional\n1,2,1,1\n2,3,1,1\n");
  const RoadNetwork net = load_network(dir / "n.csv", dir / "e.csv");
  CHECK(net.node_count() == 3);
  CHECK(net.arc_count() == 4);
  CHECK(net.index_of(3) == 2u);

  text::write_file(dir / "neg.csv", "from_node,to_node,length,bidirectional\n1,2,-1,1\n");
  CHECK_THROWS_AS(load_network(dir / "n.csv", dir / "neg.csv"), DataError);
  text::write_file(dir / "dangle.csv", "from_node,to_node,length,bidirectional\n1,9,1,1\n");
  CHECK_THROWS_AS(load_network(dir / "n.csv", dir / "dangle.csv"), DataError);
}

TEST_CASE("mask loading")
{
  testing::TempDir dir("mask");
  text::write_file(dir / "m.asc", "ncols 2\nnrows 2\nxllcorner 0\nyllcorner 0\ncellsize 1\n1 0\n0 1\n");
  const RasterMask mask = load_mask(dir / "m.asc");
  CHECK(mask.positive_cells() == 2);
  CHECK(mask.weight(0, 0) == 1.0);
  // Row 0 is the top row.
  CHECK(mask.cell_box(0, 0).min_y == 1.0);

  text::write_file(dir / "short.asc", "ncols 2\nnrows 2\nxllcorner 0\nyllcorner 0\ncellsize 1\n1 0\n0\n");
  CHECK_THROWS_AS(load_mask(dir / "short.asc"), DataError);
  text::write_file(dir / "neg.asc", "ncols 1\nnrows 1\nxllcorner 0\nyllcorner 0\ncellsize 1\n-2\n");
  CHECK_THROWS_AS(load_mask(dir / "neg.asc"), DataError);

  text::write_file(dir / "nd.asc",
                   "ncols 2\nnrows 1\nxllcenter 0.5\nyllcenter 0.5\ncellsize 1\nNODATA_value -9999\n-9999 3\n");
  const RasterMask nd = load_mask(dir / "nd.asc");
  CHECK(nd.xllcorner() == 0.0);
  CHECK(nd.is_nodata(0, 0));
  CHECK(nd.weight(0, 0) == 0.0);
  CHECK(nd.weight(0, 1) == 3.0);
}

TEST_CASE("synthetic city round-trips through every file format")
{
  synth::ScenarioConfig cfg;
  cfg.zones_x = 17;
  cfg.zones_y = 5;
  cfg.commuters = 20000;
  cfg.residential_variation = 0.5;
  cfg.seed = 85;
  const synth::Scenario s = synth::generate_scenario(cfg);
  REQUIRE(s.zones.size() == 85);

  testing::TempDir dir("roundtrip");
  synth::write_scenario(dir.path(), s);
  const ZoneSet zones = load_zones(dir / "zones.geojson");
  CHECK(zones == s.zones);
  const ODMatrix od = load_od(dir / "od.csv", zones);
  CHECK(od == s.od);
  CHECK(od.total() == cfg.commuters);
  CHECK(load_network(dir / "nodes.csv", dir / "edges.csv") == s.network);
  CHECK(load_mask(dir / "residential.asc") == s.residential_mask);
  CHECK(load_mask(dir / "jobs.asc") == s.job_mask);
  CHECK(load_crosswalk(dir / "crosswalk.csv") == s.crosswalk);
}

TEST_CASE("margin validation")
{
  std::vector<Zone> zs{testing::make_zone("A", 0, 0, 1, 2, 2)};
  const ZoneSet one(zs, "miles");
  CHECK(validate_consistency(one, ODMatrix({{0, 0, 2, std::nullopt}}, 1)).empty());

  zs[0].resident_workers = 5;
  zs[0].jobs = 3;
  const ZoneSet off(zs, "miles");
  const ODMatrix od({{0, 0, 3, std::nullopt}}, 1);
  const auto lenient = validate_consistency(off, od);
  REQUIRE(lenient.findings.size() == 1);
  CHECK(lenient.findings[0].code == "row_margin");
  CHECK(lenient.findings[0].severity == Severity::warning);
  CHECK(lenient.findings[0].message.find("delta 2") != std::string::npos);
  CHECK_FALSE(lenient.has_errors());
  CHECK(validate_consistency(off, od, Strictness::strict).has_errors());
}

TEST_CASE("crosswalk aggregation")
{
  SUBCASE("worker-weighted wage")
  {
    std::vector<Zone> zs{testing::make_zone("c1", 0, 0, 1, 3, 0), testing::make_zone("c2", 1, 0, 1, 1, 4)};
    zs[0].mean_wage = 10000;
    zs[1].mean_wage = 30000;
    const ZoneSet zones(zs, "miles");
    const ODMatrix od({{0, 1, 3, std::nullopt}, {1, 1, 1, std::nullopt}}, 2);
    const auto agg = aggregate_crosswalk(zones, od, {{"c1", "p"}, {"c2", "p"}});
    REQUIRE(agg.zones.size() == 1);
    CHECK(agg.zones[0].resident_workers == 4);
    CHECK(agg.zones[0].mean_wage == doctest::Approx(15000.0));
    CHECK(agg.od.total() == 4);
  }
  SUBCASE("flow-weighted time")
  {
    std::vector<Zone> zs{testing::make_zone("c1", 0, 0, 1, 2, 0), testing::make_zone("c2", 1, 0, 1, 2, 0),
                         testing::make_zone("d", 2, 0, 1, 0, 4)};
    const ZoneSet zones(zs, "miles");
    const ODMatrix od({{0, 2, 2, 10.0}, {1, 2, 2, 20.0}}, 3);
    const auto agg = aggregate_crosswalk(zones, od, {{"c1", "p"}, {"c2", "p"}, {"d", "d"}});
    const auto p = agg.zones.find("p");
    const auto d = agg.zones.find("d");
    REQUIRE(p);
    REQUIRE(d);
    const OdFlow* f = agg.od.find(*p, *d);
    REQUIRE(f);
    CHECK(f->commuters == 4);
    CHECK(f->mean_time_min == doctest::Approx(15.0));
  }
  SUBCASE("identity mapping reproduces the input")
  {
    synth::ScenarioConfig cfg;
    cfg.zones_x = 3;
    cfg.zones_y = 3;
    cfg.commuters = 900;
    const auto s = synth::generate_scenario(cfg);
    Crosswalk identity;
    for (const auto& z : s.zones.zones()) identity[z.id] = z.id;
    const auto agg = aggregate_crosswalk(s.zones, s.od, identity);
    CHECK(agg.zones == s.zones);
    CHECK(agg.od == s.od);
  }
  SUBCASE("mapping errors")
  {
    const ZoneSet zones = two_zones();
    const ODMatrix od({{0, 1, 2, std::nullopt}}, 2);
    CHECK_THROWS_AS(aggregate_crosswalk(zones, od, {{"A", "p"}}), DataError);
    CHECK_THROWS_AS(aggregate_crosswalk(zones, od, {{"A", "p"}, {"B", "p"}, {"Q", "p"}}), DataError);
  }
}
