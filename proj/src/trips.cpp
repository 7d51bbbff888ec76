#include "commute/trips.hpp"

#include "commute/parallel.hpp"
#include "commute/text_io.hpp"

#include <algorithm>
#include <stdexcept>
#include <utility>

namespace commute {

std::size_t ZoneSupports::fallback_count() const
{
  std::size_t n = 0;
  for (const auto& s : residential) n += s && s->fallback() ? 1 : 0;
  for (const auto& s : jobs) n += s && s->fallback() ? 1 : 0;
  return n;
}

ZoneSupports build_supports(const ZoneSet& zones, const TripCountMatrix& counts, const RasterMask& residential_mask,
                            const RasterMask& job_mask, double fallback_cellsize, bool allow_fallback,
                            unsigned threads)
{
  const auto rows = counts.row_sums();
  const auto cols = counts.column_sums();
  ZoneSupports out;
  out.residential.resize(zones.size());
  out.jobs.resize(zones.size());
  parallel_for(zones.size(), threads, [&](std::size_t i) {
    if (i < rows.size() && rows[i] > 0) {
      out.residential[i] = build_support(zones[i], residential_mask, fallback_cellsize, allow_fallback);
    }
    if (i < cols.size() && cols[i] > 0) {
      out.jobs[i] = build_support(zones[i], job_mask, fallback_cellsize, allow_fallback);
    }
  });
  return out;
}

namespace {

void shuffle(std::vector<Point>& points, RandomStream& stream)
{
  for (std::size_t k = points.size(); k > 1; --k) {
    const std::size_t j = stream.below(k);
    std::swap(points[k - 1], points[j]);
  }
}

std::vector<std::vector<Point>> sample_side(const std::vector<std::int64_t>& totals,
                                            const std::vector<std::optional<SpatialSupport>>& supports,
                                            std::uint64_t seed, std::string_view sample_purpose,
                                            std::string_view pair_purpose, unsigned threads)
{
  std::vector<std::vector<Point>> points(totals.size());
  parallel_for(totals.size(), threads, [&](std::size_t z) {
    if (totals[z] <= 0) return;
    if (z >= supports.size() || !supports[z]) {
      throw std::runtime_error("missing support for zone index " + std::to_string(z));
    }
    RandomStream sampler = RandomStream::derive(seed, sample_purpose, z);
    points[z] = sample_points(*supports[z], static_cast<std::size_t>(totals[z]), sampler);
    RandomStream shuffler = RandomStream::derive(seed, pair_purpose, z);
    shuffle(points[z], shuffler);
  });
  return points;
}

}  // namespace

TripSet pair_trips(const TripCountMatrix& counts, const ZoneSupports& supports, std::uint64_t master_seed,
                   unsigned threads)
{
  const auto rows = counts.row_sums();
  const auto cols = counts.column_sums();
  const auto origins =
      sample_side(rows, supports.residential, master_seed, kPurposeSampleOrigin, kPurposePairOrigin, threads);
  const auto dests = sample_side(cols, supports.jobs, master_seed, kPurposeSampleDest, kPurposePairDest, threads);

  TripSet out;
  out.seed = master_seed;
  out.simulated_total = counts.total();
  out.trips.reserve(static_cast<std::size_t>(counts.total()));

  // Entries are in (origin, dest) order, so each origin hands out blocks in
  // dest order and each destination in origin order.
  std::vector<std::size_t> origin_cursor(counts.zone_count(), 0);
  std::vector<std::size_t> dest_cursor(counts.zone_count(), 0);
  std::int64_t next_id = 1;
  for (const auto& entry : counts.entries()) {
    const auto t = static_cast<std::size_t>(entry.count);
    const auto& from = origins[entry.origin];
    const auto& to = dests[entry.dest];
    std::size_t& oc = origin_cursor[entry.origin];
    std::size_t& dc = dest_cursor[entry.dest];
    for (std::size_t k = 0; k < t; ++k) {
      Trip trip;
      trip.id = next_id++;
      trip.origin_zone = entry.origin;
      trip.dest_zone = entry.dest;
      trip.origin = from[oc + k];
      trip.dest = to[dc + k];
      out.trips.push_back(trip);
    }
    oc += t;
    dc += t;
  }
  return out;
}

TripCountMatrix aggregate_trips(const TripSet& trips, std::size_t zone_count)
{
  std::vector<TripCount> entries;
  for (const auto& trip : trips.trips) {
    if (!entries.empty() && entries.back().origin == trip.origin_zone && entries.back().dest == trip.dest_zone) {
      ++entries.back().count;
    } else {
      entries.push_back({trip.origin_zone, trip.dest_zone, 1});
    }
  }
  // Trips may arrive out of pair order (e.g. from an edited file); merge.
  std::sort(entries.begin(), entries.end(), [](const TripCount& a, const TripCount& b) {
    return std::pair(a.origin, a.dest) < std::pair(b.origin, b.dest);
  });
  std::vector<TripCount> merged;
  for (const auto& e : entries) {
    if (!merged.empty() && merged.back().origin == e.origin && merged.back().dest == e.dest) {
      merged.back().count += e.count;
    } else {
      merged.push_back(e);
    }
  }
  return TripCountMatrix(std::move(merged), zone_count);
}

std::string trips_csv(const TripSet& trips, const ZoneSet& zones)
{
  std::string out = "trip_id,origin_zone,dest_zone,ox,oy,dx,dy,distance\n";
  out.reserve(out.size() + trips.trips.size() * 96);
  for (const auto& t : trips.trips) {
    out += std::to_string(t.id);
    out += ',';
    out += zones[t.origin_zone].id;
    out += ',';
    out += zones[t.dest_zone].id;
    out += ',';
    out += text::format_double(t.origin.x);
    out += ',';
    out += text::format_double(t.origin.y);
    out += ',';
    out += text::format_double(t.dest.x);
    out += ',';
    out += text::format_double(t.dest.y);
    out += ',';
    if (t.distance) out += text::format_double(*t.distance);
    out += '\n';
  }
  return out;
}

void write_trips(const std::filesystem::path& path, const TripSet& trips, const ZoneSet& zones)
{
  text::write_file(path, trips_csv(trips, zones));
}

TripSet read_trips(const std::filesystem::path& path, const ZoneSet& zones)
{
  const auto table = text::read_csv(path);
  const std::size_t c_id = table.column("trip_id");
  const std::size_t c_o = table.column("origin_zone");
  const std::size_t c_d = table.column("dest_zone");
  const std::size_t c_ox = table.column("ox");
  const std::size_t c_oy = table.column("oy");
  const std::size_t c_dx = table.column("dx");
  const std::size_t c_dy = table.column("dy");
  const std::size_t c_dist = table.column("distance");

  TripSet out;
  out.trips.reserve(table.rows.size());
  std::vector<Finding> findings;
  for (const auto& row : table.rows) {
    const std::string where = path.filename().string() + " line " + std::to_string(row.line);
    auto field = [&](std::size_t c) { return c < row.fields.size() ? row.fields[c] : std::string(); };
    const auto id = text::parse_int(field(c_id));
    const auto o = zones.find(field(c_o));
    const auto d = zones.find(field(c_d));
    const auto ox = text::parse_double(field(c_ox));
    const auto oy = text::parse_double(field(c_oy));
    const auto dx = text::parse_double(field(c_dx));
    const auto dy = text::parse_double(field(c_dy));
    if (!id || !o || !d || !ox || !oy || !dx || !dy) {
      findings.push_back({Severity::error, "bad_trip", where + ": malformed trip row", {}});
      continue;
    }
    Trip trip{*id, *o, *d, {*ox, *oy}, {*dx, *dy}, std::nullopt, false};
    const std::string dist = field(c_dist);
    if (!dist.empty()) {
      trip.distance = text::parse_double(dist);
      if (!trip.distance || *trip.distance < 0.0) {
        findings.push_back({Severity::error, "bad_trip", where + ": invalid distance", {}});
        continue;
      }
    }
    out.trips.push_back(trip);
  }
  if (!findings.empty()) {
    throw DataError(path.string() + ": " + std::to_string(findings.size()) + " malformed trip row(s)",
                    std::move(findings));
  }
  out.simulated_total = static_cast<std::int64_t>(out.trips.size());
  return out;
}

}  // namespace commute
