#include "commute/pipeline.hpp"
#include "commute/synth.hpp"
#include "commute/text_io.hpp"

#include "test_support.hpp"

#include <doctest.h>
#include <nlohmann/json.hpp>

#include <cstdlib>
#include <sys/wait.h>

using namespace commute;

namespace {

std::filesystem::path make_dataset(const testing::TempDir& dir, synth::ScenarioConfig cfg)
{
  const auto path = dir / "data";
  synth::write_scenario(path, synth::generate_scenario(cfg));
  return path / "run.json";
}

int run_cli(const std::string& args)
{
  const std::string cmd = std::string(COMMUTE_CLI) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

const char* kReports[] = {"zone_metrics.csv", "regression.json", "flagtest.csv", "bivariate.csv",
                          "modal_split.csv", "quintiles.csv"};

}  // namespace

TEST_CASE("run config parsing")
{
  const auto c = parse_run_config(R"({"zones":"z.geojson","od":"od.csv","nodes":"n.csv","edges":"e.csv",
    "residential_mask":"r.asc","job_mask":"j.asc","seed":"18446744073709551615","n":50,"snap_legs":"off",
    "flag_weight":"population","strict":true,"out":"o"})",
                                  "/base");
  CHECK(c.zones == std::filesystem::path("/base/z.geojson"));
  CHECK(c.seed == 18446744073709551615ULL);
  CHECK(c.n == 50);
  CHECK(c.snap_legs == SnapLegs::off);
  CHECK(c.flag_weight == FlagWeight::population);
  CHECK(c.strict);
  CHECK(c.out == std::filesystem::path("/base/o"));
  CHECK_THROWS(parse_run_config(R"({"zones":"z"})", "."));
  CHECK_THROWS(parse_run_config(R"({"zones":"z","od":"o","nodes":"n","edges":"e","residential_mask":"r",
    "job_mask":"j","seed":-1})",
                                "."));
}

TEST_CASE("simulate is deterministic and conserves flows")
{
  testing::TempDir dir("pipe-det");
  synth::ScenarioConfig cfg;
  cfg.zones_x = 2;
  cfg.zones_y = 2;
  cfg.commuters = 800;
  const auto config_path = make_dataset(dir, cfg);
  RunConfig c = load_run_config(config_path);
  c.seed = 42;
  c.out = dir / "a";
  const auto a = run_simulate(c);
  c.out = dir / "b";
  c.threads = 3;
  run_simulate(c);
  CHECK(text::read_file(dir / "a/trips.csv") == text::read_file(dir / "b/trips.csv"));
  CHECK(text::read_file(dir / "a/run_manifest.json") == text::read_file(dir / "b/run_manifest.json"));

  const Inputs in = load_inputs(c);
  const auto agg = aggregate_trips(a.measured.trips, in.zones.size());
  for (const auto& f : in.od.flows()) CHECK(agg.count(f.origin, f.dest) == f.commuters);

  const auto manifest = nlohmann::json::parse(text::read_file(dir / "a/run_manifest.json"));
  CHECK(manifest["seed"] == 42);
  CHECK(manifest["n"] == 800);
  CHECK(manifest["N"] == 800);
  CHECK(manifest["inputs"]["od"]["sha256"] == text::sha256_file(c.od));
  CHECK(manifest["counters"]["dijkstra_runs"].get<int>() <= manifest["counters"]["distinct_origin_nodes"].get<int>());

  c.snap_legs = SnapLegs::off;
  const auto off = simulate(in, c);
  for (std::size_t k = 0; k < off.measured.trips.trips.size(); ++k) {
    CHECK(*off.measured.trips.trips[k].distance <= *a.measured.trips.trips[k].distance);
  }
}

TEST_CASE("analyze writes every report, identically on rerun")
{
  testing::TempDir dir("pipe-ana");
  synth::ScenarioConfig cfg;
  cfg.shape = synth::WageShape::convex;
  cfg.commuters = 5000;
  const auto config_path = make_dataset(dir, cfg);
  RunConfig c = load_run_config(config_path);
  run_simulate(c);
  const auto first = run_analyze(c);
  std::map<std::string, std::string> before;
  for (const char* f : kReports) before[f] = text::read_file(c.out / f);
  run_analyze(c);
  for (const char* f : kReports) CHECK_MESSAGE(text::read_file(c.out / f) == before[f], f);

  REQUIRE(first.distance_fit.fit);
  CHECK(first.flag_tests.size() == 10);
  const auto reg = nlohmann::json::parse(before["regression.json"]);
  CHECK(reg["models"]["distance"]["status"] == "ok");
  CHECK(reg["models"]["distance"]["n_obs"] == 25);
  CHECK(before["bivariate.csv"].rfind("zone_id,class\n", 0) == 0);
  CHECK_FALSE(report(c.out).empty());

  c.flag_weight = FlagWeight::population;
  CHECK_NOTHROW(run_analyze(c));
}

TEST_CASE("single-zone dataset: metrics emitted, regressions untestable")
{
  testing::TempDir dir("pipe-one");
  synth::ScenarioConfig cfg;
  cfg.zones_x = 1;
  cfg.zones_y = 1;
  cfg.commuters = 50;
  RunConfig c = load_run_config(make_dataset(dir, cfg));
  run_simulate(c);
  const auto r = run_analyze(c);
  CHECK_FALSE(r.distance_fit.fit);
  CHECK_FALSE(r.quintiles);
  REQUIRE(r.zone_metrics.size() == 1);
  CHECK(r.zone_metrics[0].mean_distance.has_value());
  const auto reg = nlohmann::json::parse(text::read_file(c.out / "regression.json"));
  CHECK(reg["models"]["distance"]["status"] == "untestable");
  CHECK(reg["models"]["time"]["status"] == "untestable");
}

TEST_CASE("analyze refuses unmeasured trips")
{
  testing::TempDir dir("pipe-nodist");
  synth::ScenarioConfig cfg;
  cfg.zones_x = 2;
  cfg.zones_y = 1;
  cfg.commuters = 40;
  RunConfig c = load_run_config(make_dataset(dir, cfg));
  run_simulate(c);
  const auto table = text::read_file(c.out / "trips.csv");
  std::string stripped;
  std::size_t pos = 0;
  while (pos < table.size()) {
    const auto end = table.find('\n', pos);
    std::string line = table.substr(pos, end - pos);
    line = line.substr(0, line.rfind(','));
    stripped += line + '\n';
    pos = end + 1;
  }
  text::write_file(dir / "nodist.csv", stripped);
  CHECK_THROWS(run_analyze(c, dir / "nodist.csv"));
}

TEST_CASE("command line")
{
  testing::TempDir dir("cli");
  const auto data = dir / "data";
  REQUIRE(run_cli("synth --out " + data.string()) == 0);
  REQUIRE(run_cli("simulate --config " + (data / "run.json").string() + " --seed 7 --threads 2") == 0);
  CHECK(std::filesystem::exists(data / "run/trips.csv"));
  REQUIRE(run_cli("analyze --config " + (data / "run.json").string()) == 0);
  CHECK(std::filesystem::exists(data / "run/flagtest.csv"));
  CHECK(run_cli("report --out " + (data / "run").string()) == 0);
  CHECK(run_cli("compare " + (data / "run").string() + " --crosswalk " + (data / "crosswalk.csv").string() +
                " --out " + (dir / "cmp").string()) == 0);
  const auto cmp = text::read_file(dir / "cmp/compare.csv");
  CHECK(cmp.rfind("zone_id,run_mean_distance,run_mean_time,run_trips\nP", 0) == 0);

  // Broken input: nonzero exit and a machine-readable report.
  text::write_file(data / "od.csv", "origin_id,dest_id,commuters,mean_time_min\nZ001,NOPE,3,\n");
  CHECK(run_cli("simulate --config " + (data / "run.json").string() + " --out " + (dir / "bad").string()) == 1);
  const auto err = nlohmann::json::parse(text::read_file(dir / "bad/error_report.json"));
  CHECK(err["status"] == "error");
  CHECK(err["findings"][0]["code"] == "unknown_zone");

  CHECK(run_cli("simulate --config " + (data / "run.json").string() + " --snap-legs maybe") != 0);
}
