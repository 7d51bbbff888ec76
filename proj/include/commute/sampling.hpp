#pragma once

#include "commute/geodata.hpp"
#include "commute/geometry.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace commute {

inline constexpr std::uint64_t kGoldenGamma = 0x9E3779B97F4A7C15ULL;

/// One splitmix64 step from state `x`: advance by the golden gamma, then mix.
std::uint64_t splitmix64(std::uint64_t x);

/// FNV-1a 64-bit hash of a purpose tag.
std::uint64_t purpose_hash(std::string_view tag);

/// Deterministic splitmix64 stream. Streams derived from the same
/// (master seed, purpose, zone index) produce the same sequence no matter
/// which thread or in which order they are consumed.
class RandomStream
{
public:
  explicit RandomStream(std::uint64_t seed) : state_(seed) {}

  /// seed = splitmix64(master ^ (purpose_hash(purpose) + zone_index * gamma))
  static RandomStream derive(std::uint64_t master_seed, std::string_view purpose, std::uint64_t zone_index);

  std::uint64_t next_u64()
  {
    const std::uint64_t out = splitmix64(state_);
    state_ += kGoldenGamma;
    return out;
  }

  /// Uniform in [0, 1) from the top 53 bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, bound); bound must be positive.
  std::size_t below(std::size_t bound);

  std::uint64_t state() const { return state_; }

private:
  std::uint64_t state_;
};

// Purpose tags for per-zone stream derivation.
inline constexpr std::string_view kPurposeSampleOrigin = "sample-origin";
inline constexpr std::string_view kPurposeSampleDest = "sample-dest";
inline constexpr std::string_view kPurposePairOrigin = "pair-origin";
inline constexpr std::string_view kPurposePairDest = "pair-dest";

// ---------------------------------------------------------------------------
// Trip-count apportionment
// ---------------------------------------------------------------------------

struct TripCount
{
  std::size_t origin = 0;
  std::size_t dest = 0;
  std::int64_t count = 0;

  friend bool operator==(const TripCount&, const TripCount&) = default;
};

/// Integer trip counts per zone pair, in (origin, dest) order; only pairs
/// with a positive count are stored.
class TripCountMatrix
{
public:
  TripCountMatrix() = default;
  TripCountMatrix(std::vector<TripCount> entries, std::size_t zone_count);

  std::span<const TripCount> entries() const { return entries_; }
  std::int64_t total() const { return total_; }
  std::size_t zone_count() const { return zone_count_; }
  std::int64_t count(std::size_t origin, std::size_t dest) const;
  std::vector<std::int64_t> row_sums() const;
  std::vector<std::int64_t> column_sums() const;

  friend bool operator==(const TripCountMatrix&, const TripCountMatrix&) = default;

private:
  std::vector<TripCount> entries_;
  std::int64_t total_ = 0;
  std::size_t zone_count_ = 0;
};

/// Largest-remainder rounding of the quotas n * x_ij / N. Floors every quota
/// then hands the leftover units to the largest fractional parts, ties going
/// to the lexicographically smallest (origin id, dest id). Exact integer
/// arithmetic throughout; n == N reproduces the flows.
TripCountMatrix apportion_trip_counts(const ODMatrix& od, std::int64_t n);

// ---------------------------------------------------------------------------
// Land-use supports
// ---------------------------------------------------------------------------

struct SupportCell
{
  BBox box;
  double weight = 0.0;
};

/// Weighted cells from which points are drawn. Cells with weight <= 0 are
/// dropped at construction so the cumulative sums are strictly increasing.
class SpatialSupport
{
public:
  SpatialSupport() = default;
  SpatialSupport(std::string zone_id, std::vector<SupportCell> cells, bool fallback);

  const std::string& zone_id() const { return zone_id_; }
  std::span<const SupportCell> cells() const { return cells_; }
  std::span<const double> cumulative() const { return cumulative_; }
  bool fallback() const { return fallback_; }
  bool empty() const { return cells_.empty(); }
  double total_weight() const { return cumulative_.empty() ? 0.0 : cumulative_.back(); }

  /// Cell whose cumulative interval contains u * total_weight, u in [0, 1).
  std::size_t select(double u) const;

private:
  std::string zone_id_;
  std::vector<SupportCell> cells_;
  std::vector<double> cumulative_;
  bool fallback_ = false;
};

/// Mask cells with positive weight whose center falls inside the zone. When
/// none qualify and fallback is allowed, a uniform grid of
/// `fallback_cellsize` squares covering the zone is used instead (cells whose
/// center is inside; the zone's bounding box if even that is empty).
/// Throws std::runtime_error naming the zone when no cell qualifies and
/// fallback is disabled.
SpatialSupport build_support(const Zone& zone, const RasterMask& mask, double fallback_cellsize,
                             bool allow_fallback = true);

/// Draws `count` points: one uniform picks a cell in proportion to weight,
/// two more place the point uniformly in that cell's box.
std::vector<Point> sample_points(const SpatialSupport& support, std::size_t count, RandomStream& stream);

}  // namespace commute
