#pragma once

#include "commute/geodata.hpp"
#include "commute/metrics.hpp"
#include "commute/routing.hpp"
#include "commute/sampling.hpp"
#include "commute/stats.hpp"
#include "commute/trips.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace commute {

enum class FlagWeight
{
  workers,
  population
};

struct RunConfig
{
  std::filesystem::path zones;
  std::filesystem::path od;
  std::filesystem::path nodes;
  std::filesystem::path edges;
  std::filesystem::path residential_mask;
  std::filesystem::path job_mask;
  std::optional<std::filesystem::path> crosswalk;
  std::string unit = "miles";
  /// Label carried into regression.json (e.g. a survey year).
  std::string label;
  std::uint64_t seed = 1;
  /// Simulated trip total; defaults to the observed total N.
  std::optional<std::int64_t> n;
  SnapLegs snap_legs = SnapLegs::on;
  /// 0 means "use the residential mask cell size".
  double fallback_cellsize = 0.0;
  bool fallback = true;
  FlagWeight flag_weight = FlagWeight::workers;
  bool strict = false;
  /// Worker cap; results never depend on it.
  unsigned threads = 0;
  std::filesystem::path out = "run";
};

/// Parses a JSON run config. Relative paths resolve against `base_dir`.
RunConfig parse_run_config(const std::string& json_text, const std::filesystem::path& base_dir);
RunConfig load_run_config(const std::filesystem::path& path);

struct InputDigest
{
  std::string name;
  std::string file;
  std::string sha256;
};

struct Inputs
{
  ZoneSet zones;
  ODMatrix od;
  RoadNetwork network;
  RasterMask residential_mask;
  RasterMask job_mask;
  ValidationReport validation;
  std::vector<InputDigest> digests;
};

/// Loads and validates every input. Throws DataError when loading fails or
/// validation produces error-severity findings.
Inputs load_inputs(const RunConfig& config);

struct SimulationResult
{
  TripCountMatrix counts;
  MeasuredTrips measured;
  std::vector<std::string> residential_fallback_zones;
  std::vector<std::string> job_fallback_zones;
};

/// apportion -> supports -> sample and pair -> measure, in memory.
SimulationResult simulate(const Inputs& inputs, const RunConfig& config);

std::string run_manifest_json(const Inputs& inputs, const RunConfig& config, const SimulationResult& result);

/// Writes trips.csv and run_manifest.json into config.out.
SimulationResult run_simulate(const RunConfig& config);

struct FitOutcome
{
  std::optional<RegressionResult> fit;
  std::string untestable_reason;
};

struct AnalysisResult
{
  std::vector<ZoneMetrics> zone_metrics;
  std::optional<QuintileAssignment> quintiles;
  std::string quintile_untestable_reason;
  FitOutcome distance_fit;
  FitOutcome time_fit;
  /// Index m * 5 + g: metric m (0 distance, 1 time), wage group g.
  std::vector<FlagTestOutcome> flag_tests;
  std::vector<std::string> bivariate;
  std::vector<ModalSplitRow> modal_split;

  std::string zone_metrics_csv;
  std::string regression_json;
  std::string flagtest_csv;
  std::string bivariate_csv;
  std::string modal_split_csv;
  std::string quintiles_csv;
};

/// Every table from measured trips plus inputs. Throws std::invalid_argument
/// when a trip lacks a distance.
AnalysisResult analyze(const Inputs& inputs, const TripSet& trips, const RunConfig& config);

/// Reads trips (default config.out / trips.csv) and writes the report files
/// into config.out.
AnalysisResult run_analyze(const RunConfig& config, const std::optional<std::filesystem::path>& trips_path = {});

/// Human-readable summary of a run directory.
std::string report(const std::filesystem::path& run_dir);

/// Joins zone_metrics.csv across run directories on parent zone ids.
/// Child zones listed in the crosswalk roll up trip-weighted; other ids pass
/// through. Columns per run: <label>_mean_distance, <label>_mean_time,
/// <label>_trips.
std::string compare_runs(const std::vector<std::filesystem::path>& run_dirs, const std::vector<std::string>& labels,
                         const Crosswalk& crosswalk);

/// Machine-readable error report body.
std::string error_report_json(const std::string& stage, const std::string& message,
                              const std::vector<Finding>& findings = {});

}  // namespace commute
