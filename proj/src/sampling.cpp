#include "commute/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace commute {

std::uint64_t splitmix64(std::uint64_t x)
{
  std::uint64_t z = x + kGoldenGamma;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t purpose_hash(std::string_view tag)
{
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (const char c : tag) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ULL;
  }
  return h;
}

RandomStream RandomStream::derive(std::uint64_t master_seed, std::string_view purpose, std::uint64_t zone_index)
{
  return RandomStream(splitmix64(master_seed ^ (purpose_hash(purpose) + zone_index * kGoldenGamma)));
}

std::size_t RandomStream::below(std::size_t bound)
{
  const auto v = static_cast<std::size_t>(uniform() * static_cast<double>(bound));
  return std::min(v, bound - 1);
}

// ---------------------------------------------------------------------------

TripCountMatrix::TripCountMatrix(std::vector<TripCount> entries, std::size_t zone_count)
    : entries_(std::move(entries)), zone_count_(zone_count)
{
  std::erase_if(entries_, [](const TripCount& t) { return t.count == 0; });
  std::sort(entries_.begin(), entries_.end(), [](const TripCount& a, const TripCount& b) {
    return std::pair(a.origin, a.dest) < std::pair(b.origin, b.dest);
  });
  for (const auto& t : entries_) {
    if (t.count < 0) throw std::invalid_argument("trip counts must be non-negative");
    if (t.origin >= zone_count_ || t.dest >= zone_count_) throw std::invalid_argument("trip count zone out of range");
    total_ += t.count;
  }
}

std::int64_t TripCountMatrix::count(std::size_t origin, std::size_t dest) const
{
  const auto it = std::lower_bound(entries_.begin(), entries_.end(), std::pair(origin, dest),
                                   [](const TripCount& t, const std::pair<std::size_t, std::size_t>& key) {
                                     return std::pair(t.origin, t.dest) < key;
                                   });
  return it != entries_.end() && it->origin == origin && it->dest == dest ? it->count : 0;
}

std::vector<std::int64_t> TripCountMatrix::row_sums() const
{
  std::vector<std::int64_t> sums(zone_count_, 0);
  for (const auto& t : entries_) sums[t.origin] += t.count;
  return sums;
}

std::vector<std::int64_t> TripCountMatrix::column_sums() const
{
  std::vector<std::int64_t> sums(zone_count_, 0);
  for (const auto& t : entries_) sums[t.dest] += t.count;
  return sums;
}

TripCountMatrix apportion_trip_counts(const ODMatrix& od, std::int64_t n)
{
  if (n <= 0) throw std::invalid_argument("trip total n must be positive");
  if (od.flows().empty() || od.total() <= 0) throw std::invalid_argument("OD matrix is empty");

  __extension__ typedef unsigned __int128 wide;
  const auto total = static_cast<wide>(od.total());
  const auto flows = od.flows();

  std::vector<TripCount> counts;
  std::vector<std::pair<std::uint64_t, std::size_t>> remainders;  // (numerator mod N, flow position)
  counts.reserve(flows.size());
  remainders.reserve(flows.size());
  std::int64_t assigned = 0;
  for (std::size_t k = 0; k < flows.size(); ++k) {
    const wide scaled = static_cast<wide>(n) * static_cast<wide>(flows[k].commuters);
    const auto whole = static_cast<std::int64_t>(scaled / total);
    counts.push_back({flows[k].origin, flows[k].dest, whole});
    remainders.emplace_back(static_cast<std::uint64_t>(scaled % total), k);
    assigned += whole;
  }

  // Flows are held in (origin, dest) index order, which is id order, so the
  // position is the lexicographic tie-break.
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  const std::int64_t leftover = n - assigned;
  for (std::int64_t u = 0; u < leftover; ++u) ++counts[remainders[static_cast<std::size_t>(u)].second].count;

  return TripCountMatrix(std::move(counts), od.zone_count());
}

// ---------------------------------------------------------------------------

SpatialSupport::SpatialSupport(std::string zone_id, std::vector<SupportCell> cells, bool fallback)
    : zone_id_(std::move(zone_id)), fallback_(fallback)
{
  double running = 0.0;
  for (auto& cell : cells) {
    if (!(cell.weight > 0.0) || !std::isfinite(cell.weight)) continue;
    running += cell.weight;
    cells_.push_back(cell);
    cumulative_.push_back(running);
  }
}

std::size_t SpatialSupport::select(double u) const
{
  const double target = u * total_weight();
  const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), target);
  const auto idx = static_cast<std::size_t>(it - cumulative_.begin());
  return std::min(idx, cells_.size() - 1);
}

SpatialSupport build_support(const Zone& zone, const RasterMask& mask, double fallback_cellsize, bool allow_fallback)
{
  const BBox box = bounding_box(zone.shape);
  std::vector<SupportCell> cells;

  if (mask.ncols() > 0 && mask.nrows() > 0 && box.min_x <= box.max_x) {
    const double cs = mask.cellsize();
    const double top = mask.yllcorner() + static_cast<double>(mask.nrows()) * cs;
    auto clamp_index = [](double v, std::size_t limit) {
      if (v < 0.0) return std::size_t{0};
      const auto i = static_cast<std::size_t>(v);
      return std::min(i, limit - 1);
    };
    const std::size_t c0 = clamp_index(std::floor((box.min_x - mask.xllcorner()) / cs), mask.ncols());
    const std::size_t c1 = clamp_index(std::floor((box.max_x - mask.xllcorner()) / cs), mask.ncols());
    const std::size_t r0 = clamp_index(std::floor((top - box.max_y) / cs), mask.nrows());
    const std::size_t r1 = clamp_index(std::floor((top - box.min_y) / cs), mask.nrows());
    for (std::size_t r = r0; r <= r1; ++r) {
      for (std::size_t c = c0; c <= c1; ++c) {
        const double w = mask.weight(r, c);
        if (!(w > 0.0)) continue;
        const BBox cell = mask.cell_box(r, c);
        if (contains(zone.shape, cell.center())) cells.push_back({cell, w});
      }
    }
  }
  if (!cells.empty()) return SpatialSupport(zone.id, std::move(cells), false);

  if (!allow_fallback) {
    throw std::runtime_error("zone " + zone.id + " has no positive land-use cell and fallback is disabled");
  }
  if (!(fallback_cellsize > 0.0)) throw std::invalid_argument("fallback cell size must be positive");

  const auto nx = static_cast<std::size_t>(std::max(1.0, std::ceil(box.width() / fallback_cellsize)));
  const auto ny = static_cast<std::size_t>(std::max(1.0, std::ceil(box.height() / fallback_cellsize)));
  for (std::size_t j = 0; j < ny; ++j) {
    for (std::size_t i = 0; i < nx; ++i) {
      const double x0 = box.min_x + static_cast<double>(i) * fallback_cellsize;
      const double y0 = box.min_y + static_cast<double>(j) * fallback_cellsize;
      const BBox cell{x0, y0, x0 + fallback_cellsize, y0 + fallback_cellsize};
      if (contains(zone.shape, cell.center())) cells.push_back({cell, 1.0});
    }
  }
  if (cells.empty() && box.min_x <= box.max_x) cells.push_back({box, 1.0});
  return SpatialSupport(zone.id, std::move(cells), true);
}

std::vector<Point> sample_points(const SpatialSupport& support, std::size_t count, RandomStream& stream)
{
  if (count > 0 && support.empty()) {
    throw std::invalid_argument("cannot sample from empty support of zone " + support.zone_id());
  }
  std::vector<Point> points;
  points.reserve(count);
  const auto cells = support.cells();
  for (std::size_t k = 0; k < count; ++k) {
    const BBox& box = cells[support.select(stream.uniform())].box;
    const double ux = stream.uniform();
    const double uy = stream.uniform();
    points.push_back({box.min_x + ux * box.width(), box.min_y + uy * box.height()});
  }
  return points;
}

}  // namespace commute
