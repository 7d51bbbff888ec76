#pragma once

#include "commute/geodata.hpp"
#include "commute/trips.hpp"

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace commute {

/// Per-zone mean commute from CTPP-style flow times.
struct TimeSummary
{
  std::optional<double> mean_time;
  /// Share (%) of the zone's outgoing commuters whose pair has a known time.
  std::optional<double> coverage_pct;
  std::int64_t counted_flow = 0;
};

enum class TimeDenominator
{
  counted_flows,    // sum of flows with a known time
  declared_workers  // the zone's R_i, verbatim
};

/// MC_i = sum_j f_ij c_ij / D_i, over pairs with a known c_ij.
std::vector<TimeSummary> mean_commute_time(const ODMatrix& od, const ZoneSet& zones,
                                           TimeDenominator denominator = TimeDenominator::counted_flows);

struct DistanceSummary
{
  std::optional<double> mean_distance;
  std::int64_t trips = 0;
};

/// Mean measured distance of trips starting in each zone. Sums run in trip
/// order with compensation. Throws std::invalid_argument on an unmeasured trip.
std::vector<DistanceSummary> mean_commute_distance(const TripSet& trips, const ZoneSet& zones);

/// Mean over all measured trips; nullopt for an empty set.
std::optional<double> global_mean_distance(const TripSet& trips);

/// Flow-weighted mean of centroid-to-centroid network distance per origin
/// zone. Intrazonal pairs are 0; disconnected centroids fall back to the
/// straight line between them.
std::vector<std::optional<double>> centroid_baseline(const ZoneSet& zones, const ODMatrix& od,
                                                     const RoadNetwork& network);

struct ZoneMetrics
{
  std::string zone_id;
  std::optional<double> mean_distance;
  std::optional<double> mean_time;
  std::int64_t trips = 0;
  std::optional<double> baseline_distance;
  std::optional<double> coverage_pct;
};

std::vector<ZoneMetrics> combine_zone_metrics(const ZoneSet& zones, const std::vector<DistanceSummary>& distance,
                                              const std::vector<TimeSummary>& time,
                                              const std::vector<std::optional<double>>& baseline);

/// zone_id,mean_distance,mean_time,trips,baseline_distance,coverage_pct
std::string zone_metrics_csv(const std::vector<ZoneMetrics>& rows);
std::vector<ZoneMetrics> read_zone_metrics(const std::filesystem::path& path);

struct ModalSplitRow
{
  std::string group;
  std::array<double, kModeCount> percent{};
  std::int64_t commuters = 0;
  std::size_t zones = 0;
};

inline constexpr const char* kAllGroupsLabel = "All";

/// Pooled mode percentages per group label (sorted), then an "All" row.
/// Zones with an empty label count only toward "All"; zones whose mode
/// counts are all zero are left out entirely.
std::vector<ModalSplitRow> modal_split(const ZoneSet& zones, const std::vector<std::string>& grouping);

std::string modal_split_csv(const std::vector<ModalSplitRow>& rows);

}  // namespace commute
