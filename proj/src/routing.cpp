#include "commute/routing.hpp"

#include "commute/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <queue>
#include <stdexcept>

namespace commute {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double squared(const Point& a, const Point& b)
{
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  return dx * dx + dy * dy;
}

}  // namespace

// ---------------------------------------------------------------------------
// Snapping
// ---------------------------------------------------------------------------

SnapIndex::SnapIndex(const RoadNetwork& network) : network_(&network)
{
  if (network.node_count() == 0) throw std::invalid_argument("cannot snap to an empty network");

  double max_x = -kInf;
  double max_y = -kInf;
  min_x_ = kInf;
  min_y_ = kInf;
  for (const auto& n : network.nodes()) {
    min_x_ = std::min(min_x_, n.position.x);
    min_y_ = std::min(min_y_, n.position.y);
    max_x = std::max(max_x, n.position.x);
    max_y = std::max(max_y, n.position.y);
  }
  const double w = max_x - min_x_;
  const double h = max_y - min_y_;
  const double count = static_cast<double>(network.node_count());
  // about one node per cell
  double cell = std::sqrt(std::max(w * h, 0.0) / count);
  if (!(cell > 0.0)) cell = std::max({w, h, 1.0}) / std::max(1.0, std::sqrt(count));
  if (!(cell > 0.0)) cell = 1.0;
  cell_ = cell;
  cols_ = static_cast<std::size_t>(std::floor(w / cell_)) + 1;
  rows_ = static_cast<std::size_t>(std::floor(h / cell_)) + 1;

  auto cell_of = [&](const Point& p) {
    const auto c = std::min(cols_ - 1, static_cast<std::size_t>((p.x - min_x_) / cell_));
    const auto r = std::min(rows_ - 1, static_cast<std::size_t>((p.y - min_y_) / cell_));
    return r * cols_ + c;
  };
  offsets_.assign(cols_ * rows_ + 1, 0);
  for (const auto& n : network.nodes()) ++offsets_[cell_of(n.position) + 1];
  for (std::size_t i = 1; i < offsets_.size(); ++i) offsets_[i] += offsets_[i - 1];
  members_.resize(network.node_count());
  std::vector<std::size_t> cursor(offsets_.begin(), offsets_.end() - 1);
  for (std::size_t i = 0; i < network.node_count(); ++i) {
    members_[cursor[cell_of(network.node(i).position)]++] = static_cast<std::uint32_t>(i);
  }
}

SnapResult SnapIndex::nearest(const Point& p) const
{
  auto clamp_cell = [](double v, std::size_t limit) -> std::ptrdiff_t {
    if (!(v >= 0.0)) return 0;
    if (v >= static_cast<double>(limit - 1)) return static_cast<std::ptrdiff_t>(limit - 1);
    return static_cast<std::ptrdiff_t>(v);
  };
  const std::ptrdiff_t pc = clamp_cell(std::floor((p.x - min_x_) / cell_), cols_);
  const std::ptrdiff_t pr = clamp_cell(std::floor((p.y - min_y_) / cell_), rows_);
  const auto cols = static_cast<std::ptrdiff_t>(cols_);
  const auto rows = static_cast<std::ptrdiff_t>(rows_);
  const std::ptrdiff_t max_ring = std::max({pc, cols - 1 - pc, pr, rows - 1 - pr});

  double best_d2 = kInf;
  std::size_t best = std::numeric_limits<std::size_t>::max();
  auto visit = [&](std::ptrdiff_t r, std::ptrdiff_t c) {
    if (r < 0 || c < 0 || r >= rows || c >= cols) return;
    const std::size_t cell = static_cast<std::size_t>(r) * cols_ + static_cast<std::size_t>(c);
    for (std::size_t k = offsets_[cell]; k < offsets_[cell + 1]; ++k) {
      const std::size_t idx = members_[k];
      const double d2 = squared(p, network_->node(idx).position);
      if (d2 < best_d2 || (d2 == best_d2 && idx < best)) {
        best_d2 = d2;
        best = idx;
      }
    }
  };

  for (std::ptrdiff_t ring = 0; ring <= max_ring; ++ring) {
    if (ring == 0) {
      visit(pr, pc);
    } else {
      for (std::ptrdiff_t c = pc - ring; c <= pc + ring; ++c) {
        visit(pr - ring, c);
        visit(pr + ring, c);
      }
      for (std::ptrdiff_t r = pr - ring + 1; r <= pr + ring - 1; ++r) {
        visit(r, pc - ring);
        visit(r, pc + ring);
      }
    }
    // Every unvisited cell is at least ring * cell_ away; strict so that an
    // equidistant lower id in the next ring is still found.
    const double bound = static_cast<double>(ring) * cell_;
    if (best != std::numeric_limits<std::size_t>::max() && best_d2 < bound * bound) break;
  }
  return {best, euclidean(p, network_->node(best).position)};
}

SnapResult snap(const Point& p, const RoadNetwork& network)
{
  return SnapIndex(network).nearest(p);
}

// ---------------------------------------------------------------------------
// Dijkstra
// ---------------------------------------------------------------------------

DijkstraWorkspace::DijkstraWorkspace(const RoadNetwork& network)
    : network_(&network),
      dist_(network.node_count(), kInf),
      settled_(network.node_count(), 0),
      wanted_(network.node_count(), 0)
{
}

DistanceQueryBatch DijkstraWorkspace::run(std::size_t source, std::span<const std::size_t> targets)
{
  if (source >= network_->node_count()) throw std::out_of_range("source node out of range");

  DistanceQueryBatch out;
  out.source = source;
  out.targets.assign(targets.begin(), targets.end());

  std::size_t remaining = 0;
  for (const std::size_t t : targets) {
    if (t >= network_->node_count()) throw std::out_of_range("target node out of range");
    if (!wanted_[t]) {
      wanted_[t] = 1;
      ++remaining;
    }
  }

  using Entry = std::pair<double, std::uint32_t>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap;
  dist_[source] = 0.0;
  touched_.push_back(static_cast<std::uint32_t>(source));
  heap.emplace(0.0, static_cast<std::uint32_t>(source));

  while (!heap.empty() && remaining > 0) {
    const auto [d, u] = heap.top();
    heap.pop();
    if (settled_[u] || d > dist_[u]) continue;
    settled_[u] = 1;
    ++out.settled_nodes;
    if (wanted_[u]) --remaining;
    for (const Arc& arc : network_->arcs_from(u)) {
      const double nd = d + arc.length;
      if (nd < dist_[arc.target]) {
        if (dist_[arc.target] == kInf) touched_.push_back(arc.target);
        dist_[arc.target] = nd;
        heap.emplace(nd, arc.target);
      }
    }
  }

  out.distances.reserve(targets.size());
  for (const std::size_t t : targets) {
    out.distances.push_back(settled_[t] ? std::optional<double>(dist_[t]) : std::nullopt);
  }

  for (const std::uint32_t v : touched_) {
    dist_[v] = kInf;
    settled_[v] = 0;
  }
  touched_.clear();
  for (const std::size_t t : targets) wanted_[t] = 0;
  return out;
}

DistanceQueryBatch shortest_distances(const RoadNetwork& network, std::size_t source,
                                      std::span<const std::size_t> targets)
{
  DijkstraWorkspace workspace(network);
  return workspace.run(source, targets);
}

// ---------------------------------------------------------------------------
// Trip measurement
// ---------------------------------------------------------------------------

MeasuredTrips measure_trips(const TripSet& trips, const RoadNetwork& network, SnapLegs legs, unsigned threads)
{
  MeasuredTrips out;
  out.trips = trips;
  const std::size_t count = trips.trips.size();
  if (count == 0) return out;

  const SnapIndex index(network);
  std::vector<SnapResult> origin_snap(count);
  std::vector<SnapResult> dest_snap(count);
  parallel_for(count, threads, [&](std::size_t k) {
    origin_snap[k] = index.nearest(trips.trips[k].origin);
    dest_snap[k] = index.nearest(trips.trips[k].dest);
  });

  std::vector<std::size_t> order(count);
  for (std::size_t k = 0; k < count; ++k) order[k] = k;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::pair(origin_snap[a].node, a) < std::pair(origin_snap[b].node, b);
  });
  std::vector<std::size_t> group_start;
  for (std::size_t k = 0; k < count; ++k) {
    if (k == 0 || origin_snap[order[k]].node != origin_snap[order[k - 1]].node) group_start.push_back(k);
  }
  group_start.push_back(count);
  const std::size_t groups = group_start.size() - 1;

  const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(resolve_threads(threads), groups));
  std::vector<RoutingCounters> per_worker(workers);
  parallel_for(workers, workers, [&](std::size_t w) {
    DijkstraWorkspace workspace(network);
    std::vector<std::size_t> targets;
    RoutingCounters& counters = per_worker[w];
    for (std::size_t g = w; g < groups; g += workers) {
      targets.clear();
      for (std::size_t k = group_start[g]; k < group_start[g + 1]; ++k) targets.push_back(dest_snap[order[k]].node);
      std::sort(targets.begin(), targets.end());
      targets.erase(std::unique(targets.begin(), targets.end()), targets.end());

      const std::size_t source = origin_snap[order[group_start[g]]].node;
      const DistanceQueryBatch batch = workspace.run(source, targets);
      ++counters.dijkstra_runs;
      counters.settled_nodes += batch.settled_nodes;

      for (std::size_t k = group_start[g]; k < group_start[g + 1]; ++k) {
        const std::size_t trip_index = order[k];
        Trip& trip = out.trips.trips[trip_index];
        const auto pos = static_cast<std::size_t>(
            std::lower_bound(targets.begin(), targets.end(), dest_snap[trip_index].node) - targets.begin());
        const auto& network_distance = batch.distances[pos];
        if (!network_distance) {
          trip.distance = euclidean(trip.origin, trip.dest);
          trip.unreachable = true;
          ++counters.unreachable_trips;
          continue;
        }
        double d = *network_distance;
        if (legs == SnapLegs::on) d += origin_snap[trip_index].snap_distance + dest_snap[trip_index].snap_distance;
        trip.distance = d;
        trip.unreachable = false;
      }
    }
  });

  for (const auto& c : per_worker) {
    out.counters.dijkstra_runs += c.dijkstra_runs;
    out.counters.settled_nodes += c.settled_nodes;
    out.counters.unreachable_trips += c.unreachable_trips;
  }
  out.counters.distinct_origin_nodes = groups;
  return out;
}

}  // namespace commute
