#pragma once

#include "commute/geodata.hpp"
#include "commute/trips.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace commute {

struct SnapResult
{
  std::size_t node = 0;  // node index (id-ascending order)
  double snap_distance = 0.0;
};

/// Uniform-grid spatial index over network nodes. Nearest-node queries
/// return exactly what a brute-force scan would: minimum Euclidean
/// distance, ties to the lowest node id.
class SnapIndex
{
public:
  explicit SnapIndex(const RoadNetwork& network);
  SnapResult nearest(const Point& p) const;

private:
  const RoadNetwork* network_;
  double min_x_ = 0.0;
  double min_y_ = 0.0;
  double cell_ = 1.0;
  std::size_t cols_ = 1;
  std::size_t rows_ = 1;
  std::vector<std::size_t> offsets_;
  std::vector<std::uint32_t> members_;
};

/// Convenience single query; throws std::invalid_argument on an empty network.
SnapResult snap(const Point& p, const RoadNetwork& network);

/// Distances from one source to a set of targets; nullopt marks unreachable.
struct DistanceQueryBatch
{
  std::size_t source = 0;
  std::vector<std::size_t> targets;
  std::vector<std::optional<double>> distances;
  std::size_t settled_nodes = 0;
};

/// Reusable Dijkstra state (binary heap). Only touched entries are reset
/// between runs, so one workspace serves many sources cheaply.
class DijkstraWorkspace
{
public:
  explicit DijkstraWorkspace(const RoadNetwork& network);

  /// Stops as soon as every target is settled.
  DistanceQueryBatch run(std::size_t source, std::span<const std::size_t> targets);

private:
  const RoadNetwork* network_;
  std::vector<double> dist_;
  std::vector<std::uint8_t> settled_;
  std::vector<std::uint8_t> wanted_;
  std::vector<std::uint32_t> touched_;
};

DistanceQueryBatch shortest_distances(const RoadNetwork& network, std::size_t source,
                                      std::span<const std::size_t> targets);

enum class SnapLegs
{
  off,
  on
};

struct RoutingCounters
{
  std::uint64_t dijkstra_runs = 0;
  std::uint64_t settled_nodes = 0;
  std::uint64_t unreachable_trips = 0;
  std::uint64_t distinct_origin_nodes = 0;
};

struct MeasuredTrips
{
  TripSet trips;
  RoutingCounters counters;
};

/// Network distance per trip between the snapped endpoints, plus both snap
/// legs when `legs` is on. Trips sharing a snapped origin node share one
/// early-terminated Dijkstra run. Disconnected endpoints get the straight-line
/// distance and the unreachable flag.
MeasuredTrips measure_trips(const TripSet& trips, const RoadNetwork& network, SnapLegs legs = SnapLegs::on,
                            unsigned threads = 1);

}  // namespace commute
