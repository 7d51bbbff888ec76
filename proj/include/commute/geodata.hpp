#pragma once

#include "commute/geometry.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace commute {

inline constexpr std::size_t kWageBinCount = 5;
inline constexpr std::size_t kModeCount = 4;

inline constexpr std::array<std::string_view, kWageBinCount> kWageBinLabels = {
    "<15k", "15-35k", "35-50k", "50-75k", ">75k"};
inline constexpr std::array<std::string_view, kWageBinCount> kWageBinProperties = {
    "wage_lt15k", "wage_15_35k", "wage_35_50k", "wage_50_75k", "wage_gt75k"};
inline constexpr std::array<std::string_view, kModeCount> kModeLabels = {
    "drove_alone", "carpool", "transit", "other"};
inline constexpr std::array<std::string_view, kModeCount> kModeProperties = {
    "mode_drove", "mode_carpool", "mode_transit", "mode_other"};

// ---------------------------------------------------------------------------
// Validation findings
// ---------------------------------------------------------------------------

enum class Severity
{
  warning,
  error
};

std::string_view to_string(Severity s);

struct Finding
{
  Severity severity = Severity::error;
  std::string code;
  std::string message;
  std::vector<std::string> ids;
};

struct ValidationReport
{
  std::vector<Finding> findings;

  bool empty() const { return findings.empty(); }
  bool has_errors() const;
  std::size_t count(Severity s) const;
};

/// Raised by every loader. Carries all findings collected before giving up,
/// so a caller can emit a complete machine-readable report.
class DataError : public std::runtime_error
{
public:
  DataError(const std::string& what, std::vector<Finding> findings);
  const std::vector<Finding>& findings() const { return findings_; }

private:
  std::vector<Finding> findings_;
};

// ---------------------------------------------------------------------------
// Zones
// ---------------------------------------------------------------------------

struct Zone
{
  std::string id;
  MultiPolygon shape;
  std::int64_t resident_workers = 0;
  std::int64_t jobs = 0;
  std::optional<double> mean_wage;
  std::array<std::int64_t, kWageBinCount> wage_bins{};
  std::array<std::int64_t, kModeCount> mode_counts{};
  /// Optional total population, used only as an alternative flag-test weight.
  std::optional<std::int64_t> population;

  friend bool operator==(const Zone&, const Zone&) = default;
};

/// Zones in canonical order (id ascending). Position in this order is the
/// zone index used by every other module.
class ZoneSet
{
public:
  ZoneSet() = default;
  /// Sorts by id; throws DataError on duplicate ids.
  ZoneSet(std::vector<Zone> zones, std::string unit, std::string year = {});

  std::span<const Zone> zones() const { return zones_; }
  std::size_t size() const { return zones_.size(); }
  const Zone& operator[](std::size_t i) const { return zones_[i]; }
  std::optional<std::size_t> find(std::string_view id) const;

  const std::string& unit() const { return unit_; }
  const std::string& year() const { return year_; }

  friend bool operator==(const ZoneSet& a, const ZoneSet& b)
  {
    return a.zones_ == b.zones_ && a.unit_ == b.unit_ && a.year_ == b.year_;
  }

private:
  std::vector<Zone> zones_;
  std::unordered_map<std::string, std::size_t> index_;
  std::string unit_ = "miles";
  std::string year_;
};

// ---------------------------------------------------------------------------
// Origin-destination flows
// ---------------------------------------------------------------------------

struct OdFlow
{
  std::size_t origin = 0;
  std::size_t dest = 0;
  std::int64_t commuters = 0;
  std::optional<double> mean_time_min;

  friend bool operator==(const OdFlow&, const OdFlow&) = default;
};

/// Sparse flow table keyed by (origin, dest) zone index, held in key order.
class ODMatrix
{
public:
  ODMatrix() = default;
  /// Throws DataError on duplicate keys, negative counts, out-of-range
  /// indices, or a zero total.
  ODMatrix(std::vector<OdFlow> flows, std::size_t zone_count);

  std::span<const OdFlow> flows() const { return flows_; }
  std::int64_t total() const { return total_; }
  std::size_t zone_count() const { return zone_count_; }
  const OdFlow* find(std::size_t origin, std::size_t dest) const;

  std::vector<std::int64_t> row_sums() const;
  std::vector<std::int64_t> column_sums() const;

  friend bool operator==(const ODMatrix&, const ODMatrix&) = default;

private:
  std::vector<OdFlow> flows_;
  std::int64_t total_ = 0;
  std::size_t zone_count_ = 0;
};

// ---------------------------------------------------------------------------
// Road network
// ---------------------------------------------------------------------------

struct RoadNode
{
  std::int64_t id = 0;
  Point position;

  friend bool operator==(const RoadNode&, const RoadNode&) = default;
};

struct RoadEdge
{
  std::int64_t from = 0;
  std::int64_t to = 0;
  double length = 0.0;
  bool bidirectional = true;

  friend bool operator==(const RoadEdge&, const RoadEdge&) = default;
};

struct Arc
{
  std::uint32_t target = 0;
  double length = 0.0;
};

/// Nodes are held in id-ascending order; node index follows that order.
/// Adjacency is compressed (CSR); bidirectional edges become two arcs.
class RoadNetwork
{
public:
  RoadNetwork() = default;
  /// Throws DataError on duplicate node ids, dangling references, or
  /// negative/non-finite lengths.
  RoadNetwork(std::vector<RoadNode> nodes, std::vector<RoadEdge> edges);

  std::size_t node_count() const { return nodes_.size(); }
  std::size_t arc_count() const { return arcs_.size(); }
  const RoadNode& node(std::size_t index) const { return nodes_[index]; }
  std::span<const RoadNode> nodes() const { return nodes_; }
  std::span<const RoadEdge> edges() const { return edges_; }
  std::optional<std::size_t> index_of(std::int64_t node_id) const;

  std::span<const Arc> arcs_from(std::size_t index) const
  {
    return {arcs_.data() + offsets_[index], arcs_.data() + offsets_[index + 1]};
  }

  friend bool operator==(const RoadNetwork& a, const RoadNetwork& b)
  {
    return a.nodes_ == b.nodes_ && a.edges_ == b.edges_;
  }

private:
  std::vector<RoadNode> nodes_;
  std::vector<RoadEdge> edges_;
  std::vector<std::size_t> offsets_;
  std::vector<Arc> arcs_;
};

// ---------------------------------------------------------------------------
// Land-use raster
// ---------------------------------------------------------------------------

/// Row 0 is the top (northernmost) row, as in the ASCII grid body.
class RasterMask
{
public:
  RasterMask() = default;
  /// `values` is row-major, top row first. Cells equal to `nodata_value`
  /// are recorded as weight 0 with the nodata flag set. Throws DataError on
  /// dimension mismatch, negative weights, or a non-positive cell size.
  RasterMask(std::size_t ncols, std::size_t nrows, double xllcorner, double yllcorner, double cellsize,
             std::optional<double> nodata_value, std::vector<double> values);

  std::size_t ncols() const { return ncols_; }
  std::size_t nrows() const { return nrows_; }
  double xllcorner() const { return xll_; }
  double yllcorner() const { return yll_; }
  double cellsize() const { return cellsize_; }
  std::optional<double> nodata_value() const { return nodata_; }

  double weight(std::size_t row, std::size_t col) const { return weights_[row * ncols_ + col]; }
  bool is_nodata(std::size_t row, std::size_t col) const { return nodata_flags_[row * ncols_ + col] != 0; }
  BBox cell_box(std::size_t row, std::size_t col) const;
  Point cell_center(std::size_t row, std::size_t col) const { return cell_box(row, col).center(); }
  BBox extent() const;
  std::size_t positive_cells() const;

  friend bool operator==(const RasterMask&, const RasterMask&) = default;

private:
  std::size_t ncols_ = 0;
  std::size_t nrows_ = 0;
  double xll_ = 0.0;
  double yll_ = 0.0;
  double cellsize_ = 1.0;
  std::optional<double> nodata_;
  std::vector<double> weights_;
  std::vector<std::uint8_t> nodata_flags_;
};

// ---------------------------------------------------------------------------
// Crosswalk
// ---------------------------------------------------------------------------

/// child id -> parent id
using Crosswalk = std::map<std::string, std::string>;

struct AggregatedData
{
  ZoneSet zones;
  ODMatrix od;
};

// ---------------------------------------------------------------------------
// Loading, writing, validation
// ---------------------------------------------------------------------------

ZoneSet load_zones(const std::filesystem::path& path, const std::string& unit = "miles");
void write_zones(const std::filesystem::path& path, const ZoneSet& zones);

ODMatrix load_od(const std::filesystem::path& path, const ZoneSet& zones);
void write_od(const std::filesystem::path& path, const ODMatrix& od, const ZoneSet& zones);

RoadNetwork load_network(const std::filesystem::path& nodes_path, const std::filesystem::path& edges_path);
void write_network(const std::filesystem::path& nodes_path, const std::filesystem::path& edges_path,
                   const RoadNetwork& network);

RasterMask load_mask(const std::filesystem::path& path);
void write_mask(const std::filesystem::path& path, const RasterMask& mask);

Crosswalk load_crosswalk(const std::filesystem::path& path);
void write_crosswalk(const std::filesystem::path& path, const Crosswalk& crosswalk);

enum class Strictness
{
  lenient,  // margin mismatches are warnings
  strict    // margin mismatches are errors
};

/// Checks OD margins against declared worker and job counts.
ValidationReport validate_consistency(const ZoneSet& zones, const ODMatrix& od,
                                      Strictness strictness = Strictness::lenient);

/// Sums counts and flows to parent zones. Mean wage becomes the
/// worker-weighted mean of the children, mean time the flow-weighted mean of
/// child-pair times, and the parent shape the union (as a multipolygon) of
/// the child shapes.
AggregatedData aggregate_crosswalk(const ZoneSet& zones, const ODMatrix& od, const Crosswalk& crosswalk);

}  // namespace commute
