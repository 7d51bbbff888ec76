#include "commute/metrics.hpp"

#include "commute/numeric.hpp"
#include "commute/routing.hpp"
#include "commute/text_io.hpp"

#include <map>
#include <stdexcept>

namespace commute {

std::vector<TimeSummary> mean_commute_time(const ODMatrix& od, const ZoneSet& zones, TimeDenominator denominator)
{
  const std::size_t n = zones.size();
  std::vector<CompensatedSum<double>> weighted(n);
  std::vector<std::int64_t> counted(n, 0);
  std::vector<std::int64_t> all(n, 0);
  for (const auto& f : od.flows()) {
    all[f.origin] += f.commuters;
    if (!f.mean_time_min) continue;
    weighted[f.origin] += static_cast<double>(f.commuters) * *f.mean_time_min;
    counted[f.origin] += f.commuters;
  }

  std::vector<TimeSummary> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i].counted_flow = counted[i];
    if (all[i] > 0) out[i].coverage_pct = 100.0 * static_cast<double>(counted[i]) / static_cast<double>(all[i]);
    const std::int64_t denom = denominator == TimeDenominator::counted_flows ? counted[i] : zones[i].resident_workers;
    if (denom > 0 && counted[i] > 0) out[i].mean_time = weighted[i].value() / static_cast<double>(denom);
  }
  return out;
}

std::vector<DistanceSummary> mean_commute_distance(const TripSet& trips, const ZoneSet& zones)
{
  std::vector<CompensatedSum<double>> sums(zones.size());
  std::vector<DistanceSummary> out(zones.size());
  for (const auto& t : trips.trips) {
    if (!t.distance) throw std::invalid_argument("trip " + std::to_string(t.id) + " has no measured distance");
    sums[t.origin_zone] += *t.distance;
    ++out[t.origin_zone].trips;
  }
  for (std::size_t i = 0; i < zones.size(); ++i) {
    if (out[i].trips > 0) out[i].mean_distance = sums[i].value() / static_cast<double>(out[i].trips);
  }
  return out;
}

std::optional<double> global_mean_distance(const TripSet& trips)
{
  if (trips.trips.empty()) return std::nullopt;
  CompensatedSum<double> sum;
  for (const auto& t : trips.trips) {
    if (!t.distance) throw std::invalid_argument("trip " + std::to_string(t.id) + " has no measured distance");
    sum += *t.distance;
  }
  return sum.value() / static_cast<double>(trips.trips.size());
}

std::vector<std::optional<double>> centroid_baseline(const ZoneSet& zones, const ODMatrix& od,
                                                     const RoadNetwork& network)
{
  const SnapIndex index(network);
  std::vector<Point> centers(zones.size());
  std::vector<std::size_t> nodes(zones.size());
  for (std::size_t i = 0; i < zones.size(); ++i) {
    const auto c = centroid(zones[i].shape);
    if (!c) throw std::invalid_argument("zone " + zones[i].id + " has no geometry");
    centers[i] = *c;
    nodes[i] = index.nearest(*c).node;
  }

  DijkstraWorkspace workspace(network);
  std::vector<CompensatedSum<double>> weighted(zones.size());
  std::vector<std::int64_t> flow(zones.size(), 0);
  const auto flows = od.flows();
  for (std::size_t start = 0; start < flows.size();) {
    const std::size_t origin = flows[start].origin;
    std::size_t end = start;
    std::vector<std::size_t> targets;
    while (end < flows.size() && flows[end].origin == origin) targets.push_back(nodes[flows[end++].dest]);
    const DistanceQueryBatch batch = workspace.run(nodes[origin], targets);
    for (std::size_t k = start; k < end; ++k) {
      const OdFlow& f = flows[k];
      if (f.commuters <= 0) continue;
      double d = 0.0;
      if (f.dest != origin) {
        const auto& nd = batch.distances[k - start];
        d = nd ? *nd : euclidean(centers[origin], centers[f.dest]);
      }
      weighted[origin] += static_cast<double>(f.commuters) * d;
      flow[origin] += f.commuters;
    }
    start = end;
  }

  std::vector<std::optional<double>> out(zones.size());
  for (std::size_t i = 0; i < zones.size(); ++i) {
    if (flow[i] > 0) out[i] = weighted[i].value() / static_cast<double>(flow[i]);
  }
  return out;
}

std::vector<ZoneMetrics> combine_zone_metrics(const ZoneSet& zones, const std::vector<DistanceSummary>& distance,
                                              const std::vector<TimeSummary>& time,
                                              const std::vector<std::optional<double>>& baseline)
{
  std::vector<ZoneMetrics> rows(zones.size());
  for (std::size_t i = 0; i < zones.size(); ++i) {
    rows[i].zone_id = zones[i].id;
    if (i < distance.size()) {
      rows[i].mean_distance = distance[i].mean_distance;
      rows[i].trips = distance[i].trips;
    }
    if (i < time.size()) {
      rows[i].mean_time = time[i].mean_time;
      rows[i].coverage_pct = time[i].coverage_pct;
    }
    if (i < baseline.size()) rows[i].baseline_distance = baseline[i];
  }
  return rows;
}

namespace {

std::string optional_field(const std::optional<double>& v)
{
  return v ? text::format_double(*v) : std::string();
}

}  // namespace

std::string zone_metrics_csv(const std::vector<ZoneMetrics>& rows)
{
  std::string out = "zone_id,mean_distance,mean_time,trips,baseline_distance,coverage_pct\n";
  for (const auto& r : rows) {
    out += r.zone_id + ',' + optional_field(r.mean_distance) + ',' + optional_field(r.mean_time) + ',' +
           std::to_string(r.trips) + ',' + optional_field(r.baseline_distance) + ',' + optional_field(r.coverage_pct) +
           '\n';
  }
  return out;
}

std::vector<ZoneMetrics> read_zone_metrics(const std::filesystem::path& path)
{
  const auto table = text::read_csv(path);
  const std::size_t c_id = table.column("zone_id");
  const std::size_t c_dist = table.column("mean_distance");
  const std::size_t c_time = table.column("mean_time");
  const std::size_t c_trips = table.column("trips");
  const std::size_t c_base = table.column("baseline_distance");
  const std::size_t c_cov = table.column("coverage_pct");
  std::vector<ZoneMetrics> rows;
  for (const auto& row : table.rows) {
    auto field = [&](std::size_t c) { return c < row.fields.size() ? row.fields[c] : std::string(); };
    ZoneMetrics m;
    m.zone_id = field(c_id);
    m.mean_distance = text::parse_double(field(c_dist));
    m.mean_time = text::parse_double(field(c_time));
    m.trips = text::parse_int(field(c_trips)).value_or(0);
    m.baseline_distance = text::parse_double(field(c_base));
    m.coverage_pct = text::parse_double(field(c_cov));
    rows.push_back(std::move(m));
  }
  return rows;
}

std::vector<ModalSplitRow> modal_split(const ZoneSet& zones, const std::vector<std::string>& grouping)
{
  if (grouping.size() != zones.size()) throw std::invalid_argument("grouping must label every zone");

  struct Accum
  {
    std::array<std::int64_t, kModeCount> counts{};
    std::size_t zones = 0;
  };
  std::map<std::string, Accum> groups;
  Accum all;
  for (std::size_t i = 0; i < zones.size(); ++i) {
    const auto& modes = zones[i].mode_counts;
    std::int64_t total = 0;
    for (const auto c : modes) total += c;
    if (total == 0) continue;
    for (std::size_t m = 0; m < kModeCount; ++m) all.counts[m] += modes[m];
    ++all.zones;
    if (grouping[i].empty()) continue;
    Accum& g = groups[grouping[i]];
    for (std::size_t m = 0; m < kModeCount; ++m) g.counts[m] += modes[m];
    ++g.zones;
  }

  auto finish = [](const std::string& label, const Accum& a) {
    ModalSplitRow row;
    row.group = label;
    row.zones = a.zones;
    for (const auto c : a.counts) row.commuters += c;
    for (std::size_t m = 0; m < kModeCount; ++m) {
      row.percent[m] =
          row.commuters > 0 ? 100.0 * static_cast<double>(a.counts[m]) / static_cast<double>(row.commuters) : 0.0;
    }
    return row;
  };
  std::vector<ModalSplitRow> rows;
  for (const auto& [label, acc] : groups) rows.push_back(finish(label, acc));
  rows.push_back(finish(kAllGroupsLabel, all));
  return rows;
}

std::string modal_split_csv(const std::vector<ModalSplitRow>& rows)
{
  std::string out = "group";
  for (const auto label : kModeLabels) out += ",pct_" + std::string(label);
  out += ",commuters,zones\n";
  for (const auto& r : rows) {
    out += r.group;
    for (const double p : r.percent) out += ',' + text::format_double(p);
    out += ',' + std::to_string(r.commuters) + ',' + std::to_string(r.zones) + '\n';
  }
  return out;
}

}  // namespace commute
