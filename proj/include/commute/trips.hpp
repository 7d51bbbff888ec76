#pragma once

#include "commute/geodata.hpp"
#include "commute/sampling.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace commute {

struct Trip
{
  /// 1-based trip index k.
  std::int64_t id = 0;
  std::size_t origin_zone = 0;
  std::size_t dest_zone = 0;
  Point origin;
  Point dest;
  std::optional<double> distance;
  /// Set by routing when the endpoints were not connected and the distance
  /// fell back to the straight line.
  bool unreachable = false;

  friend bool operator==(const Trip&, const Trip&) = default;
};

struct TripSet
{
  std::vector<Trip> trips;
  std::uint64_t seed = 0;
  std::int64_t simulated_total = 0;  // n
  std::int64_t observed_total = 0;   // N
};

/// Residential and job supports indexed by zone; absent where the zone
/// needs no points.
struct ZoneSupports
{
  std::vector<std::optional<SpatialSupport>> residential;
  std::vector<std::optional<SpatialSupport>> jobs;

  std::size_t fallback_count() const;
};

/// Builds supports for every zone with a positive row sum (residential) or
/// column sum (jobs) in `counts`.
ZoneSupports build_supports(const ZoneSet& zones, const TripCountMatrix& counts, const RasterMask& residential_mask,
                            const RasterMask& job_mask, double fallback_cellsize, bool allow_fallback = true,
                            unsigned threads = 1);

/// Samples row-sum worker points per origin zone and column-sum job points
/// per destination zone, shuffles each zone's points with its own stream,
/// and hands out consecutive blocks of t_ij points to each pair. Every
/// sampled point ends up in exactly one trip. Output is in (origin, dest)
/// order with ids 1..n, independent of the thread count.
TripSet pair_trips(const TripCountMatrix& counts, const ZoneSupports& supports, std::uint64_t master_seed,
                   unsigned threads = 1);

/// Regroups trips by zone pair.
TripCountMatrix aggregate_trips(const TripSet& trips, std::size_t zone_count);

/// trip_id,origin_zone,dest_zone,ox,oy,dx,dy,distance
std::string trips_csv(const TripSet& trips, const ZoneSet& zones);
void write_trips(const std::filesystem::path& path, const TripSet& trips, const ZoneSet& zones);
/// Reads trips.csv; seed and totals are not part of the file and stay zero.
TripSet read_trips(const std::filesystem::path& path, const ZoneSet& zones);

}  // namespace commute
