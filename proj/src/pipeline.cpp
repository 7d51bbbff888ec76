#include "commute/pipeline.hpp"

#include "commute/numeric.hpp"
#include "commute/text_io.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>

namespace commute {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

constexpr const char* kTripsFile = "trips.csv";
constexpr const char* kManifestFile = "run_manifest.json";
constexpr const char* kZoneMetricsFile = "zone_metrics.csv";
constexpr const char* kRegressionFile = "regression.json";
constexpr const char* kFlagTestFile = "flagtest.csv";
constexpr const char* kBivariateFile = "bivariate.csv";
constexpr const char* kModalSplitFile = "modal_split.csv";
constexpr const char* kQuintilesFile = "quintiles.csv";

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p)
{
  const std::filesystem::path path(p);
  return path.is_absolute() ? path : (base / path).lexically_normal();
}

std::uint64_t seed_from_json(const json& v)
{
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer()) {
    const auto s = v.get<std::int64_t>();
    if (s < 0) throw std::invalid_argument("seed must be a non-negative 64-bit integer");
    return static_cast<std::uint64_t>(s);
  }
  if (v.is_string()) {
    if (const auto s = text::parse_uint(v.get<std::string>())) return *s;
  }
  throw std::invalid_argument("seed must be a 64-bit unsigned integer");
}

/// JSON number, or a string for non-finite values.
ordered_json number(double v)
{
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "+inf" : "-inf";
}

ordered_json findings_json(const std::vector<Finding>& findings)
{
  ordered_json out = ordered_json::array();
  for (const auto& f : findings) {
    out.push_back({{"severity", std::string(to_string(f.severity))},
                   {"code", f.code},
                   {"message", f.message},
                   {"ids", f.ids}});
  }
  return out;
}

ordered_json fit_json(const FitOutcome& outcome)
{
  if (!outcome.fit) return {{"status", "untestable"}, {"reason", outcome.untestable_reason}};
  const RegressionResult& r = *outcome.fit;
  ordered_json coefficients = ordered_json::object();
  for (std::size_t i = 0; i < r.names.size(); ++i) {
    coefficients[r.names[i]] = {{"estimate", number(r.coefficients[i])},
                                {"std_error", number(r.std_errors[i])},
                                {"t", number(r.t_stats[i])},
                                {"p", number(r.p_values[i])},
                                {"stars", significance_stars(r.p_values[i])}};
  }
  return {{"status", "ok"},
          {"n_obs", r.n_obs},
          {"df_residual", r.df_residual},
          {"r_squared", number(r.r_squared)},
          {"f_statistic", number(r.f_statistic)},
          {"f_p_value", number(r.f_p_value)},
          {"coefficients", coefficients}};
}

FitOutcome fit_metric(const std::vector<std::optional<double>>& metric, const ZoneSet& zones)
{
  std::vector<double> y;
  std::vector<double> w;
  for (std::size_t i = 0; i < zones.size(); ++i) {
    if (!metric[i] || !zones[i].mean_wage) continue;
    y.push_back(*metric[i]);
    w.push_back(*zones[i].mean_wage);
  }
  FitOutcome out;
  if (y.size() < 4) {
    out.untestable_reason = "needs at least 4 zones with both a metric and a mean wage, found " + std::to_string(y.size());
    return out;
  }
  try {
    out.fit = quadratic_fit(y, w);
  } catch (const std::exception& e) {
    out.untestable_reason = e.what();
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

RunConfig parse_run_config(const std::string& json_text, const std::filesystem::path& base_dir)
{
  const json j = json::parse(json_text);
  RunConfig c;
  auto path_field = [&](const char* key) {
    if (!j.contains(key)) throw std::invalid_argument(std::string("run config lacks '") + key + "'");
    return resolve(base_dir, j.at(key).get<std::string>());
  };
  c.zones = path_field("zones");
  c.od = path_field("od");
  c.nodes = path_field("nodes");
  c.edges = path_field("edges");
  c.residential_mask = path_field("residential_mask");
  c.job_mask = path_field("job_mask");
  if (j.contains("crosswalk") && !j.at("crosswalk").is_null()) c.crosswalk = path_field("crosswalk");
  c.unit = j.value("unit", c.unit);
  c.label = j.value("label", c.label);
  if (j.contains("seed")) c.seed = seed_from_json(j.at("seed"));
  if (j.contains("n") && !j.at("n").is_null()) c.n = j.at("n").get<std::int64_t>();
  if (j.contains("snap_legs")) {
    const auto& v = j.at("snap_legs");
    if (v.is_boolean()) {
      c.snap_legs = v.get<bool>() ? SnapLegs::on : SnapLegs::off;
    } else {
      const auto s = v.get<std::string>();
      if (s != "on" && s != "off") throw std::invalid_argument("snap_legs must be 'on' or 'off'");
      c.snap_legs = s == "on" ? SnapLegs::on : SnapLegs::off;
    }
  }
  c.fallback_cellsize = j.value("fallback_cellsize", c.fallback_cellsize);
  c.fallback = j.value("fallback", c.fallback);
  if (j.contains("flag_weight")) {
    const auto s = j.at("flag_weight").get<std::string>();
    if (s == "workers") {
      c.flag_weight = FlagWeight::workers;
    } else if (s == "population") {
      c.flag_weight = FlagWeight::population;
    } else {
      throw std::invalid_argument("flag_weight must be 'workers' or 'population'");
    }
  }
  c.strict = j.value("strict", c.strict);
  c.threads = j.value("threads", c.threads);
  if (j.contains("out")) c.out = resolve(base_dir, j.at("out").get<std::string>());
  else c.out = base_dir / "run";
  if (c.n && *c.n <= 0) throw std::invalid_argument("n must be positive");
  if (c.fallback_cellsize < 0.0) throw std::invalid_argument("fallback_cellsize must not be negative");
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path)
{
  return parse_run_config(text::read_file(path), path.parent_path().empty() ? "." : path.parent_path());
}

// ---------------------------------------------------------------------------
// Simulation
// ---------------------------------------------------------------------------

Inputs load_inputs(const RunConfig& config)
{
  Inputs in;
  in.zones = load_zones(config.zones, config.unit);
  in.od = load_od(config.od, in.zones);
  in.network = load_network(config.nodes, config.edges);
  in.residential_mask = load_mask(config.residential_mask);
  in.job_mask = load_mask(config.job_mask);
  in.validation = validate_consistency(in.zones, in.od, config.strict ? Strictness::strict : Strictness::lenient);
  if (in.validation.has_errors()) throw DataError("input validation failed", in.validation.findings);
  if (in.network.node_count() == 0) {
    throw DataError("road network has no nodes", {{Severity::error, "empty_network", "road network has no nodes", {}}});
  }

  auto digest = [&](const char* name, const std::filesystem::path& p) {
    in.digests.push_back({name, p.filename().string(), text::sha256_file(p)});
  };
  digest("zones", config.zones);
  digest("od", config.od);
  digest("nodes", config.nodes);
  digest("edges", config.edges);
  digest("residential_mask", config.residential_mask);
  digest("job_mask", config.job_mask);
  return in;
}

SimulationResult simulate(const Inputs& inputs, const RunConfig& config)
{
  const std::int64_t n = config.n.value_or(inputs.od.total());
  const double cellsize =
      config.fallback_cellsize > 0.0 ? config.fallback_cellsize : inputs.residential_mask.cellsize();

  SimulationResult out;
  out.counts = apportion_trip_counts(inputs.od, n);
  const ZoneSupports supports = build_supports(inputs.zones, out.counts, inputs.residential_mask, inputs.job_mask,
                                               cellsize, config.fallback, config.threads);
  for (std::size_t i = 0; i < inputs.zones.size(); ++i) {
    if (supports.residential[i] && supports.residential[i]->fallback()) {
      out.residential_fallback_zones.push_back(inputs.zones[i].id);
    }
    if (supports.jobs[i] && supports.jobs[i]->fallback()) out.job_fallback_zones.push_back(inputs.zones[i].id);
  }
  TripSet trips = pair_trips(out.counts, supports, config.seed, config.threads);
  trips.simulated_total = n;
  trips.observed_total = inputs.od.total();
  out.measured = measure_trips(trips, inputs.network, config.snap_legs, config.threads);
  return out;
}

std::string run_manifest_json(const Inputs& inputs, const RunConfig& config, const SimulationResult& result)
{
  const TripSet& trips = result.measured.trips;
  const RoutingCounters& c = result.measured.counters;
  std::vector<std::int64_t> unreachable;
  for (const auto& t : trips.trips) {
    if (t.unreachable) unreachable.push_back(t.id);
  }
  ordered_json digests = ordered_json::object();
  for (const auto& d : inputs.digests) digests[d.name] = {{"file", d.file}, {"sha256", d.sha256}};

  ordered_json m;
  m["seed"] = config.seed;
  m["n"] = trips.simulated_total;
  m["N"] = trips.observed_total;
  m["trips"] = trips.trips.size();
  m["snap_legs"] = config.snap_legs == SnapLegs::on ? "on" : "off";
  m["fallback"] = config.fallback;
  m["fallback_cellsize"] =
      config.fallback_cellsize > 0.0 ? config.fallback_cellsize : inputs.residential_mask.cellsize();
  m["validation"] = config.strict ? "strict" : "lenient";
  m["counters"] = {{"dijkstra_runs", c.dijkstra_runs},
                   {"distinct_origin_nodes", c.distinct_origin_nodes},
                   {"settled_nodes", c.settled_nodes},
                   {"unreachable_trips", c.unreachable_trips}};
  m["fallback_zones"] = {{"residential", result.residential_fallback_zones}, {"jobs", result.job_fallback_zones}};
  m["unreachable_trip_ids"] = unreachable;
  m["findings"] = findings_json(inputs.validation.findings);
  m["inputs"] = digests;
  return m.dump(2) + "\n";
}

SimulationResult run_simulate(const RunConfig& config)
{
  const Inputs inputs = load_inputs(config);
  SimulationResult result = simulate(inputs, config);
  write_trips(config.out / kTripsFile, result.measured.trips, inputs.zones);
  text::write_file(config.out / kManifestFile, run_manifest_json(inputs, config, result));
  return result;
}

// ---------------------------------------------------------------------------
// Analysis
// ---------------------------------------------------------------------------

AnalysisResult analyze(const Inputs& inputs, const TripSet& trips, const RunConfig& config)
{
  const ZoneSet& zones = inputs.zones;
  const std::size_t nz = zones.size();
  AnalysisResult out;

  const auto distance = mean_commute_distance(trips, zones);
  const auto time = mean_commute_time(inputs.od, zones);
  const auto baseline = centroid_baseline(zones, inputs.od, inputs.network);
  out.zone_metrics = combine_zone_metrics(zones, distance, time, baseline);
  out.zone_metrics_csv = zone_metrics_csv(out.zone_metrics);

  std::array<std::vector<std::optional<double>>, 2> metric;
  for (const auto& row : out.zone_metrics) {
    metric[0].push_back(row.mean_distance);
    metric[1].push_back(row.mean_time);
  }

  try {
    out.quintiles = quintile_group(zones);
  } catch (const std::invalid_argument& e) {
    out.quintile_untestable_reason = e.what();
  }

  out.distance_fit = fit_metric(metric[0], zones);
  out.time_fit = fit_metric(metric[1], zones);
  ordered_json reg;
  reg["label"] = config.label;
  reg["dependent"] = {{"distance", "mean commute distance (" + zones.unit() + ")"},
                      {"time", "mean commute time (minutes)"}};
  reg["models"] = {{"distance", fit_json(out.distance_fit)}, {"time", fit_json(out.time_fit)}};
  out.regression_json = reg.dump(2) + "\n";

  std::vector<double> weights(nz, 0.0);
  for (std::size_t i = 0; i < nz; ++i) {
    if (config.flag_weight == FlagWeight::workers) {
      weights[i] = static_cast<double>(zones[i].resident_workers);
    } else {
      if (!zones[i].population) throw std::invalid_argument("zone " + zones[i].id + " has no population for flag weights");
      weights[i] = static_cast<double>(*zones[i].population);
    }
  }
  constexpr std::array<const char*, 2> metric_names = {"distance", "time"};
  std::ostringstream flag;
  flag << "metric,wage_group,benchmark,pct_below,pct_above,difference,t,p,stars,n_below,n_above,status\n";
  for (std::size_t m = 0; m < 2; ++m) {
    for (std::size_t b = 0; b < kWageBinCount; ++b) {
      const auto shares = wage_group_shares(zones, b);
      FlagTestOutcome outcome = flag_test(metric[m], shares, weights, std::string(kWageBinLabels[b]));
      flag << metric_names[m] << ',' << kWageBinLabels[b] << ',';
      if (outcome.row) {
        const FlagTestRow& r = *outcome.row;
        flag << text::format_double(r.benchmark) << ',' << text::format_double(r.pct_below) << ','
             << text::format_double(r.pct_above) << ',' << text::format_double(r.difference) << ','
             << text::format_double(r.t) << ',' << text::format_double(r.p) << ',' << r.stars << ',' << r.n_below
             << ',' << r.n_above << ",ok\n";
      } else {
        flag << ",,,,,,,,,untestable\n";
      }
      out.flag_tests.push_back(std::move(outcome));
    }
  }
  out.flagtest_csv = flag.str();

  std::string bivariate = "zone_id,class\n";
  if (out.quintiles) {
    out.bivariate = bivariate_classify(metric[0], *out.quintiles);
  } else {
    out.bivariate.assign(nz, std::string());
  }
  for (std::size_t i = 0; i < nz; ++i) bivariate += zones[i].id + ',' + out.bivariate[i] + '\n';
  out.bivariate_csv = std::move(bivariate);

  out.modal_split = modal_split(zones, out.quintiles ? out.quintiles->labels() : std::vector<std::string>(nz));
  out.modal_split_csv = modal_split_csv(out.modal_split);

  std::string quint = "group,wage_cutoff,zones,mean_distance,mean_time\n";
  if (out.quintiles) {
    for (std::size_t q = 0; q < kQuintiles; ++q) {
      std::size_t members = 0;
      std::array<CompensatedSum<double>, 2> sum;
      std::array<std::size_t, 2> count{};
      for (std::size_t i = 0; i < nz; ++i) {
        if (out.quintiles->group[i] != static_cast<int>(q)) continue;
        ++members;
        for (std::size_t m = 0; m < 2; ++m) {
          if (!metric[m][i]) continue;
          sum[m] += *metric[m][i];
          ++count[m];
        }
      }
      quint += std::string(kQuintileLabels[q]) + ',' + text::format_double(out.quintiles->cutoff[q]) + ',' +
               std::to_string(members);
      for (std::size_t m = 0; m < 2; ++m) {
        quint += ',';
        if (count[m] > 0) quint += text::format_double(sum[m].value() / static_cast<double>(count[m]));
      }
      quint += '\n';
    }
  }
  out.quintiles_csv = std::move(quint);
  return out;
}

AnalysisResult run_analyze(const RunConfig& config, const std::optional<std::filesystem::path>& trips_path)
{
  const Inputs inputs = load_inputs(config);
  const TripSet trips = read_trips(trips_path.value_or(config.out / kTripsFile), inputs.zones);
  for (const auto& t : trips.trips) {
    if (!t.distance) {
      throw std::invalid_argument("trips file lacks a distance for trip " + std::to_string(t.id) +
                                  "; run simulate first");
    }
  }
  AnalysisResult result = analyze(inputs, trips, config);
  text::write_file(config.out / kZoneMetricsFile, result.zone_metrics_csv);
  text::write_file(config.out / kRegressionFile, result.regression_json);
  text::write_file(config.out / kFlagTestFile, result.flagtest_csv);
  text::write_file(config.out / kBivariateFile, result.bivariate_csv);
  text::write_file(config.out / kModalSplitFile, result.modal_split_csv);
  text::write_file(config.out / kQuintilesFile, result.quintiles_csv);
  return result;
}

// ---------------------------------------------------------------------------
// Reporting
// ---------------------------------------------------------------------------

std::string report(const std::filesystem::path& run_dir)
{
  std::ostringstream s;
  s << "Run directory: " << run_dir.string() << "\n";

  if (std::filesystem::exists(run_dir / kManifestFile)) {
    const json m = json::parse(text::read_file(run_dir / kManifestFile));
    s << "\nSimulation\n";
    s << "  seed " << m.at("seed").dump() << ", n = " << m.at("n").dump() << " of N = " << m.at("N").dump()
      << ", snap legs " << m.at("snap_legs").get<std::string>() << "\n";
    const auto& c = m.at("counters");
    s << "  dijkstra runs " << c.at("dijkstra_runs").dump() << " (distinct origin nodes "
      << c.at("distinct_origin_nodes").dump() << "), unreachable trips " << c.at("unreachable_trips").dump() << "\n";
    s << "  fallback zones: residential " << m.at("fallback_zones").at("residential").size() << ", jobs "
      << m.at("fallback_zones").at("jobs").size() << "\n";
  }

  if (std::filesystem::exists(run_dir / kZoneMetricsFile)) {
    const auto rows = read_zone_metrics(run_dir / kZoneMetricsFile);
    CompensatedSum<double> weighted;
    std::int64_t trips = 0;
    for (const auto& r : rows) {
      if (!r.mean_distance) continue;
      weighted += *r.mean_distance * static_cast<double>(r.trips);
      trips += r.trips;
    }
    s << "\nZones: " << rows.size();
    if (trips > 0) {
      s << ", overall mean distance " << text::format_fixed(weighted.value() / static_cast<double>(trips), 2)
        << " over " << trips << " trips";
    }
    s << "\n";
  }

  if (std::filesystem::exists(run_dir / kQuintilesFile)) {
    const auto table = text::read_csv(run_dir / kQuintilesFile);
    if (!table.rows.empty()) {
      s << "\nBy wage quintile\n  group    cutoff      zones  distance  time\n";
      for (const auto& r : table.rows) {
        auto num = [&](std::size_t c, int d) {
          const auto v = c < r.fields.size() ? text::parse_double(r.fields[c]) : std::nullopt;
          return v ? text::format_fixed(*v, d) : std::string("-");
        };
        char line[128];
        std::snprintf(line, sizeof line, "  %-7s %10s %6s %9s %7s\n", r.fields[0].c_str(), num(1, 0).c_str(),
                      r.fields[2].c_str(), num(3, 2).c_str(), num(4, 2).c_str());
        s << line;
      }
    }
  }

  if (std::filesystem::exists(run_dir / kRegressionFile)) {
    const json reg = json::parse(text::read_file(run_dir / kRegressionFile));
    s << "\nQuadratic fit on mean wage\n";
    for (const auto& [metric, model] : reg.at("models").items()) {
      s << "  " << metric << ": ";
      if (model.at("status") != "ok") {
        s << "untestable (" << model.at("reason").get<std::string>() << ")\n";
        continue;
      }
      s << "n = " << model.at("n_obs").dump() << ", R^2 = " << model.at("r_squared").dump() << "\n";
      for (const auto& [name, coef] : model.at("coefficients").items()) {
        s << "    " << name << " = " << coef.at("estimate").dump() << " (t = " << coef.at("t").dump()
          << ", p = " << coef.at("p").dump() << ") " << coef.at("stars").get<std::string>() << "\n";
      }
    }
  }

  if (std::filesystem::exists(run_dir / kFlagTestFile)) {
    const auto table = text::read_csv(run_dir / kFlagTestFile);
    s << "\nWage groups above/below the weighted mean commute (%)\n"
      << "  metric    group     below   above    diff        t\n";
    for (const auto& r : table.rows) {
      auto field = [&](std::size_t c) { return c < r.fields.size() ? r.fields[c] : std::string(); };
      auto num = [&](std::size_t c, int d) {
        const auto v = text::parse_double(field(c));
        return v ? text::format_fixed(*v, d) : std::string("-");
      };
      char line[160];
      std::snprintf(line, sizeof line, "  %-9s %-7s %7s %7s %7s %8s %s\n", field(0).c_str(), field(1).c_str(),
                    num(3, 1).c_str(), num(4, 1).c_str(), num(5, 1).c_str(), num(6, 2).c_str(), field(8).c_str());
      s << line;
    }
  }
  return s.str();
}

std::string compare_runs(const std::vector<std::filesystem::path>& run_dirs, const std::vector<std::string>& labels,
                         const Crosswalk& crosswalk)
{
  if (labels.size() != run_dirs.size()) throw std::invalid_argument("one label per run directory is required");

  struct Cell
  {
    CompensatedSum<double> distance;
    CompensatedSum<double> time;
    std::int64_t trips = 0;
    std::int64_t time_trips = 0;
  };
  std::map<std::string, std::vector<Cell>> table;
  for (std::size_t r = 0; r < run_dirs.size(); ++r) {
    for (const auto& row : read_zone_metrics(run_dirs[r] / kZoneMetricsFile)) {
      const auto it = crosswalk.find(row.zone_id);
      const std::string& key = it == crosswalk.end() ? row.zone_id : it->second;
      auto& cells = table[key];
      cells.resize(run_dirs.size());
      Cell& c = cells[r];
      c.trips += row.trips;
      if (row.mean_distance) c.distance += *row.mean_distance * static_cast<double>(row.trips);
      if (row.mean_time) {
        c.time += *row.mean_time * static_cast<double>(row.trips);
        c.time_trips += row.trips;
      }
    }
  }

  std::string out = "zone_id";
  for (const auto& l : labels) out += ',' + l + "_mean_distance," + l + "_mean_time," + l + "_trips";
  out += '\n';
  for (auto& [id, cells] : table) {
    cells.resize(run_dirs.size());
    out += id;
    for (const auto& c : cells) {
      out += ',';
      if (c.trips > 0) out += text::format_double(c.distance.value() / static_cast<double>(c.trips));
      out += ',';
      if (c.time_trips > 0) out += text::format_double(c.time.value() / static_cast<double>(c.time_trips));
      out += ',' + std::to_string(c.trips);
    }
    out += '\n';
  }
  return out;
}

std::string error_report_json(const std::string& stage, const std::string& message,
                              const std::vector<Finding>& findings)
{
  ordered_json j;
  j["status"] = "error";
  j["stage"] = stage;
  j["message"] = message;
  j["findings"] = findings_json(findings);
  return j.dump(2) + "\n";
}

}  // namespace commute
