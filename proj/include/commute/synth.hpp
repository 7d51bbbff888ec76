#pragma once

#include "commute/geodata.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace commute::synth {

enum class WageShape
{
  none,      // commute reach independent of wage
  monotone,  // reach grows with wage
  convex     // reach rises to the peak wage group, then falls
};

std::string_view to_string(WageShape shape);
WageShape parse_wage_shape(std::string_view text);

struct ScenarioConfig
{
  std::size_t zones_x = 5;
  std::size_t zones_y = 5;
  double zone_size = 2.0;
  std::size_t nodes_per_zone_side = 4;
  std::size_t mask_cells_per_zone_side = 8;
  std::int64_t commuters = 10000;
  /// 0 spreads jobs over every cell of a zone, 1 puts them in a single cell.
  double job_clustering = 0.0;
  /// 0 gives every residential cell weight 1; up to 1 draws weights in
  /// [1 - v, 1 + v] per cell.
  double residential_variation = 0.0;
  WageShape shape = WageShape::none;
  int peak_group = 2;
  std::uint64_t seed = 1;
  double wage_min = 15000.0;
  double wage_max = 60000.0;
  std::string unit = "miles";
  std::string year = "synthetic";
};

/// Throws std::invalid_argument describing the first infeasible setting.
void validate(const ScenarioConfig& config);

ScenarioConfig config_from_json(const std::string& json_text);
std::string config_to_json(const ScenarioConfig& config);

struct Scenario
{
  ScenarioConfig config;
  ZoneSet zones;
  ODMatrix od;
  RoadNetwork network;
  RasterMask residential_mask;
  RasterMask job_mask;
  Crosswalk crosswalk;
  /// Flow-weighted straight-line distance per zone from the generator's own
  /// bookkeeping (intrazonal pairs use the mean distance within a square).
  std::vector<double> expected_zone_distance;
  /// Mean of expected_zone_distance over the zones of each wage quintile.
  std::array<double, 5> expected_quintile_distance{};
};

Scenario generate_scenario(const ScenarioConfig& config);

/// File names written by write_scenario, relative to the dataset directory.
struct DatasetFiles
{
  static constexpr const char* zones = "zones.geojson";
  static constexpr const char* od = "od.csv";
  static constexpr const char* nodes = "nodes.csv";
  static constexpr const char* edges = "edges.csv";
  static constexpr const char* residential_mask = "residential.asc";
  static constexpr const char* job_mask = "jobs.asc";
  static constexpr const char* crosswalk = "crosswalk.csv";
  static constexpr const char* scenario = "scenario.json";
  static constexpr const char* run_config = "run.json";
};

/// Writes every dataset file plus the scenario config and a run config
/// pointing at the files.
void write_scenario(const std::filesystem::path& dir, const Scenario& scenario);

// ---------------------------------------------------------------------------
// Oracles
// ---------------------------------------------------------------------------

inline constexpr std::size_t kOracleMaxNodes = 200;

/// Floyd-Warshall distances by node index; +infinity marks unreachable.
/// Throws std::invalid_argument above kOracleMaxNodes nodes.
std::vector<std::vector<double>> oracle_all_pairs(const RoadNetwork& network);

/// Weighted normal equations accumulated and solved in quad precision with
/// full pivoting. Empty weights means unweighted. Throws std::domain_error on
/// rank deficiency.
std::vector<double> oracle_ols(std::span<const std::vector<double>> columns, std::span<const double> y,
                               std::span<const double> weights);

}  // namespace commute::synth
