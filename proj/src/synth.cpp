#include "commute/synth.hpp"

#include "commute/sampling.hpp"
#include "commute/stats.hpp"
#include "commute/text_io.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace commute::synth {

namespace {

using nlohmann::json;

// Mean distance between two uniform points in a unit square.
constexpr double kUnitSquareMeanDistance = 0.5214054331647207;

constexpr std::array<double, kWageBinCount> kBinRepresentativeWage = {10000.0, 25000.0, 42500.0, 62500.0, 100000.0};
constexpr double kBinSpread = 15000.0;

/// Largest-remainder split of `total` in proportion to `weights`; ties go to
/// the lower index.
std::vector<std::int64_t> apportion(std::int64_t total, const std::vector<double>& weights)
{
  std::vector<std::int64_t> out(weights.size(), 0);
  const double sum = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (total <= 0 || !(sum > 0.0)) return out;
  std::vector<double> remainder(weights.size());
  std::int64_t assigned = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const double quota = static_cast<double>(total) * weights[i] / sum;
    out[i] = static_cast<std::int64_t>(std::floor(quota));
    remainder[i] = quota - static_cast<double>(out[i]);
    assigned += out[i];
  }
  std::vector<std::size_t> order(weights.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
  for (std::size_t k = 0; assigned < total; k = (k + 1) % order.size()) {
    if (weights[order[k]] <= 0.0) continue;
    ++out[order[k]];
    ++assigned;
  }
  for (std::size_t k = order.size(); assigned > total && k-- > 0;) {
    if (out[order[k]] == 0) continue;
    --out[order[k]];
    --assigned;
  }
  return out;
}

std::string padded_id(char prefix, std::size_t index, std::size_t count)
{
  std::size_t width = 3;
  for (std::size_t c = count; c >= 1000; c /= 10) ++width;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%c%0*zu", prefix, static_cast<int>(width), index + 1);
  return buf;
}

/// Commute reach as a multiple of zone size for wage position p in (0, 1).
double reach_factor(const ScenarioConfig& config, double p)
{
  constexpr double lo = 0.35;
  constexpr double hi = 3.0;
  switch (config.shape) {
    case WageShape::none: return 1.2;
    case WageShape::monotone: return lo + (hi - lo) * p;
    case WageShape::convex: {
      const double peak = (config.peak_group + 0.5) / static_cast<double>(kQuintiles);
      const double span = std::max(peak, 1.0 - peak);
      return lo + (hi - lo) * (1.0 - std::abs(p - peak) / span);
    }
  }
  return 1.0;
}

}  // namespace

std::string_view to_string(WageShape shape)
{
  switch (shape) {
    case WageShape::none: return "none";
    case WageShape::monotone: return "monotone";
    case WageShape::convex: return "convex";
  }
  return "none";
}

WageShape parse_wage_shape(std::string_view text)
{
  if (text == "none") return WageShape::none;
  if (text == "monotone") return WageShape::monotone;
  if (text == "convex") return WageShape::convex;
  throw std::invalid_argument("unknown wage shape '" + std::string(text) + "'");
}

void validate(const ScenarioConfig& c)
{
  auto fail = [](const std::string& what) { throw std::invalid_argument("infeasible scenario: " + what); };
  if (c.zones_x == 0 || c.zones_y == 0) fail("zone grid must be at least 1x1");
  if (!(c.zone_size > 0.0) || !std::isfinite(c.zone_size)) fail("zone_size must be positive");
  if (c.nodes_per_zone_side == 0) fail("nodes_per_zone_side must be positive");
  if (c.mask_cells_per_zone_side == 0) fail("mask_cells_per_zone_side must be positive");
  if (c.commuters <= 0) fail("commuters must be positive");
  if (!(c.job_clustering >= 0.0 && c.job_clustering <= 1.0)) fail("job_clustering must lie in [0, 1]");
  if (!(c.residential_variation >= 0.0 && c.residential_variation <= 1.0)) {
    fail("residential_variation must lie in [0, 1]");
  }
  if (c.peak_group < 0 || c.peak_group >= static_cast<int>(kQuintiles)) fail("peak_group must lie in 0..4");
  if (!(c.wage_min > 0.0) || !(c.wage_max > c.wage_min)) fail("wage range must be positive and increasing");
  const double nodes_per_axis =
      static_cast<double>(std::max(c.zones_x, c.zones_y)) * static_cast<double>(c.nodes_per_zone_side);
  if (nodes_per_axis * nodes_per_axis >= static_cast<double>(std::numeric_limits<std::uint32_t>::max())) {
    fail("network too large");
  }
}

ScenarioConfig config_from_json(const std::string& json_text)
{
  const json j = json::parse(json_text);
  ScenarioConfig c;
  c.zones_x = j.value("zones_x", c.zones_x);
  c.zones_y = j.value("zones_y", c.zones_y);
  c.zone_size = j.value("zone_size", c.zone_size);
  c.nodes_per_zone_side = j.value("nodes_per_zone_side", c.nodes_per_zone_side);
  c.mask_cells_per_zone_side = j.value("mask_cells_per_zone_side", c.mask_cells_per_zone_side);
  c.commuters = j.value("commuters", c.commuters);
  c.job_clustering = j.value("job_clustering", c.job_clustering);
  c.residential_variation = j.value("residential_variation", c.residential_variation);
  if (j.contains("shape")) c.shape = parse_wage_shape(j.at("shape").get<std::string>());
  c.peak_group = j.value("peak_group", c.peak_group);
  if (j.contains("seed")) {
    const auto& s = j.at("seed");
    if (s.is_string()) {
      const auto v = text::parse_uint(s.get<std::string>());
      if (!v) throw std::invalid_argument("seed must be a 64-bit unsigned integer");
      c.seed = *v;
    } else {
      c.seed = s.get<std::uint64_t>();
    }
  }
  c.wage_min = j.value("wage_min", c.wage_min);
  c.wage_max = j.value("wage_max", c.wage_max);
  c.unit = j.value("unit", c.unit);
  c.year = j.value("year", c.year);
  validate(c);
  return c;
}

std::string config_to_json(const ScenarioConfig& c)
{
  json j;
  j["zones_x"] = c.zones_x;
  j["zones_y"] = c.zones_y;
  j["zone_size"] = c.zone_size;
  j["nodes_per_zone_side"] = c.nodes_per_zone_side;
  j["mask_cells_per_zone_side"] = c.mask_cells_per_zone_side;
  j["commuters"] = c.commuters;
  j["job_clustering"] = c.job_clustering;
  j["residential_variation"] = c.residential_variation;
  j["shape"] = std::string(to_string(c.shape));
  j["peak_group"] = c.peak_group;
  j["seed"] = c.seed;
  j["wage_min"] = c.wage_min;
  j["wage_max"] = c.wage_max;
  j["unit"] = c.unit;
  j["year"] = c.year;
  return j.dump(2) + "\n";
}

Scenario generate_scenario(const ScenarioConfig& config)
{
  validate(config);
  const std::size_t zx = config.zones_x;
  const std::size_t zy = config.zones_y;
  const std::size_t zone_count = zx * zy;
  const double s = config.zone_size;
  const std::uint64_t seed = config.seed;

  // Zone index z = row * zx + col, row 0 at the south edge.
  std::vector<Point> center(zone_count);
  for (std::size_t z = 0; z < zone_count; ++z) {
    center[z] = {(static_cast<double>(z % zx) + 0.5) * s, (static_cast<double>(z / zx) + 0.5) * s};
  }

  // Wages: evenly spaced ranks with a little jitter. Without a wage shape the
  // ranks are a plain random permutation. With one, zones are dealt to wage
  // quintiles in blocks of five by distance from the city center, so every
  // quintile sees the same mix of central and edge locations.
  std::vector<std::size_t> rank(zone_count);
  std::iota(rank.begin(), rank.end(), std::size_t{0});
  {
    RandomStream rng = RandomStream::derive(seed, "synth-wage-rank", 0);
    auto shuffle = [&](auto first, std::size_t count) {
      for (std::size_t i = count; i > 1; --i) std::swap(first[i - 1], first[rng.below(i)]);
    };
    if (config.shape == WageShape::none || zone_count < kQuintiles) {
      shuffle(rank.begin(), zone_count);
    } else {
      const Point mid{static_cast<double>(zx) * s / 2.0, static_cast<double>(zy) * s / 2.0};
      std::vector<std::size_t> by_center(zone_count);
      std::iota(by_center.begin(), by_center.end(), std::size_t{0});
      shuffle(by_center.begin(), zone_count);
      std::stable_sort(by_center.begin(), by_center.end(), [&](std::size_t a, std::size_t b) {
        return euclidean(center[a], mid) < euclidean(center[b], mid);
      });
      std::array<std::vector<std::size_t>, kQuintiles> slots;
      for (std::size_t r = 0; r < zone_count; ++r) slots[kQuintiles * r / zone_count].push_back(r);
      for (auto& slot : slots) shuffle(slot.begin(), slot.size());
      std::array<std::size_t, kQuintiles> order{0, 1, 2, 3, 4};
      std::size_t dealt = kQuintiles;
      for (const std::size_t z : by_center) {
        for (;;) {
          if (dealt == kQuintiles) {
            shuffle(order.begin(), kQuintiles);
            dealt = 0;
          }
          auto& slot = slots[order[dealt++]];
          if (slot.empty()) continue;
          rank[z] = slot.back();
          slot.pop_back();
          break;
        }
      }
    }
  }
  std::vector<double> position(zone_count);
  std::vector<double> wage(zone_count);
  const double step = (config.wage_max - config.wage_min) / static_cast<double>(zone_count);
  for (std::size_t z = 0; z < zone_count; ++z) {
    RandomStream rng = RandomStream::derive(seed, "synth-wage-jitter", z);
    position[z] = (static_cast<double>(rank[z]) + 0.5) / static_cast<double>(zone_count);
    const double jitter = (rng.uniform() - 0.5) * 0.6 * step;
    wage[z] = std::round(config.wage_min + position[z] * (config.wage_max - config.wage_min) + jitter);
  }

  // Resident workers and job attractiveness.
  std::vector<double> worker_weight(zone_count);
  std::vector<double> attraction(zone_count);
  for (std::size_t z = 0; z < zone_count; ++z) {
    RandomStream rng = RandomStream::derive(seed, "synth-size", z);
    worker_weight[z] = 0.5 + rng.uniform();
    attraction[z] = 0.5 + rng.uniform();
  }
  const std::vector<std::int64_t> workers = apportion(config.commuters, worker_weight);

  // Flows: destination choice decays with distance at a wage-dependent reach.
  const double intrazonal = kUnitSquareMeanDistance * s;
  auto pair_distance = [&](std::size_t i, std::size_t j) {
    return i == j ? intrazonal : euclidean(center[i], center[j]);
  };
  std::vector<OdFlow> flows;
  std::vector<double> expected(zone_count, 0.0);
  std::vector<std::int64_t> jobs(zone_count, 0);
  for (std::size_t i = 0; i < zone_count; ++i) {
    const double reach = reach_factor(config, position[i]) * s;
    std::vector<double> weight(zone_count);
    for (std::size_t j = 0; j < zone_count; ++j) weight[j] = attraction[j] * std::exp(-pair_distance(i, j) / reach);
    const std::vector<std::int64_t> row = apportion(workers[i], weight);
    RandomStream rng = RandomStream::derive(seed, "synth-time", i);
    double weighted = 0.0;
    for (std::size_t j = 0; j < zone_count; ++j) {
      const double noise = rng.uniform();
      if (row[j] == 0) continue;
      const double d = pair_distance(i, j);
      const double minutes = 3.0 + 2.4 * d * (0.9 + 0.2 * noise);
      flows.push_back({i, j, row[j], std::round(minutes * 100.0) / 100.0});
      weighted += static_cast<double>(row[j]) * d;
      jobs[j] += row[j];
    }
    if (workers[i] > 0) expected[i] = weighted / static_cast<double>(workers[i]);
  }

  // Zone attributes.
  std::vector<Zone> zones(zone_count);
  for (std::size_t z = 0; z < zone_count; ++z) {
    Zone& zone = zones[z];
    zone.id = padded_id('Z', z, zone_count);
    const double x0 = static_cast<double>(z % zx) * s;
    const double y0 = static_cast<double>(z / zx) * s;
    zone.shape = {Polygon{Ring{{x0, y0}, {x0 + s, y0}, {x0 + s, y0 + s}, {x0, y0 + s}, {x0, y0}}}};
    zone.resident_workers = workers[z];
    zone.jobs = jobs[z];
    zone.mean_wage = wage[z];

    std::vector<double> bin_weight(kWageBinCount);
    for (std::size_t b = 0; b < kWageBinCount; ++b) {
      const double u = (kBinRepresentativeWage[b] - wage[z]) / kBinSpread;
      bin_weight[b] = std::exp(-0.5 * u * u) + 0.01;
    }
    const auto bins = apportion(workers[z], bin_weight);
    std::copy(bins.begin(), bins.end(), zone.wage_bins.begin());

    const double p = position[z];
    const double drove = 0.60 + 0.25 * p;
    const double carpool = 0.12 - 0.04 * p;
    const double transit = 0.02 + 0.16 * (1.0 - p);
    const auto modes = apportion(workers[z], {drove, carpool, transit, std::max(0.0, 1.0 - drove - carpool - transit)});
    std::copy(modes.begin(), modes.end(), zone.mode_counts.begin());

    RandomStream rng = RandomStream::derive(seed, "synth-population", z);
    zone.population = workers[z] + static_cast<std::int64_t>(std::llround(static_cast<double>(workers[z]) * (0.5 + rng.uniform())));
  }

  // Road grid: k nodes per zone side at cell centers, 4-neighbour edges.
  const std::size_t k = config.nodes_per_zone_side;
  const std::size_t kx = zx * k;
  const std::size_t ky = zy * k;
  const double spacing = s / static_cast<double>(k);
  std::vector<RoadNode> nodes;
  std::vector<RoadEdge> edges;
  nodes.reserve(kx * ky);
  edges.reserve(2 * kx * ky);
  auto node_id = [&](std::size_t r, std::size_t c) { return static_cast<std::int64_t>(r * kx + c + 1); };
  for (std::size_t r = 0; r < ky; ++r) {
    for (std::size_t c = 0; c < kx; ++c) {
      nodes.push_back({node_id(r, c), {(static_cast<double>(c) + 0.5) * spacing, (static_cast<double>(r) + 0.5) * spacing}});
      if (c + 1 < kx) edges.push_back({node_id(r, c), node_id(r, c + 1), spacing, true});
      if (r + 1 < ky) edges.push_back({node_id(r, c), node_id(r + 1, c), spacing, true});
    }
  }

  // Masks share one grid; row 0 is the northern edge.
  const std::size_t m = config.mask_cells_per_zone_side;
  const std::size_t ncols = zx * m;
  const std::size_t nrows = zy * m;
  const double cellsize = s / static_cast<double>(m);
  std::vector<double> residential(ncols * nrows, 1.0);
  std::vector<double> job_cells(ncols * nrows, 0.0);
  auto cell_slot = [&](std::size_t z, std::size_t lr, std::size_t lc) {
    const std::size_t south_row = (z / zx) * m + lr;
    const std::size_t col = (z % zx) * m + lc;
    return (nrows - 1 - south_row) * ncols + col;
  };
  const std::size_t per_zone = m * m;
  const auto cluster_size = static_cast<std::size_t>(
      std::max<long long>(1, std::llround((1.0 - config.job_clustering) * static_cast<double>(per_zone))));
  for (std::size_t z = 0; z < zone_count; ++z) {
    if (config.residential_variation > 0.0) {
      RandomStream rng = RandomStream::derive(seed, "synth-residential", z);
      for (std::size_t cell = 0; cell < per_zone; ++cell) {
        const double w = 1.0 + config.residential_variation * (2.0 * rng.uniform() - 1.0);
        residential[cell_slot(z, cell / m, cell % m)] = std::round(w * 1000.0) / 1000.0;
      }
    }
    if (jobs[z] == 0) continue;
    if (cluster_size == 0) {
      throw std::invalid_argument("infeasible scenario: zone " + zones[z].id + " has jobs but no job cells");
    }
    RandomStream rng = RandomStream::derive(seed, "synth-job-cluster", z);
    const std::size_t hub = rng.below(per_zone);
    const auto hr = static_cast<long long>(hub / m);
    const auto hc = static_cast<long long>(hub % m);
    std::vector<std::size_t> cells(per_zone);
    std::iota(cells.begin(), cells.end(), std::size_t{0});
    auto dist2 = [&](std::size_t cell) {
      const long long dr = static_cast<long long>(cell / m) - hr;
      const long long dc = static_cast<long long>(cell % m) - hc;
      return dr * dr + dc * dc;
    };
    std::stable_sort(cells.begin(), cells.end(), [&](std::size_t a, std::size_t b) { return dist2(a) < dist2(b); });
    for (std::size_t q = 0; q < cluster_size; ++q) job_cells[cell_slot(z, cells[q] / m, cells[q] % m)] = 1.0;
  }

  // Crosswalk: horizontally adjacent zone pairs share a parent.
  Crosswalk crosswalk;
  const std::size_t parents_x = (zx + 1) / 2;
  for (std::size_t z = 0; z < zone_count; ++z) {
    const std::size_t parent = (z / zx) * parents_x + (z % zx) / 2;
    crosswalk[zones[z].id] = padded_id('P', parent, parents_x * zy);
  }

  Scenario out{config,
               ZoneSet(std::move(zones), config.unit, config.year),
               {},
               RoadNetwork(std::move(nodes), std::move(edges)),
               RasterMask(ncols, nrows, 0.0, 0.0, cellsize, std::nullopt, std::move(residential)),
               RasterMask(ncols, nrows, 0.0, 0.0, cellsize, std::nullopt, std::move(job_cells)),
               std::move(crosswalk),
               expected,
               {}};
  out.od = ODMatrix(std::move(flows), zone_count);

  if (zone_count >= kQuintiles) {
    const QuintileAssignment quintiles = quintile_group(out.zones);
    std::array<double, kQuintiles> sum{};
    std::array<std::size_t, kQuintiles> members{};
    for (std::size_t z = 0; z < zone_count; ++z) {
      if (!quintiles.group[z] || workers[z] == 0) continue;
      sum[*quintiles.group[z]] += expected[z];
      ++members[*quintiles.group[z]];
    }
    for (std::size_t q = 0; q < kQuintiles; ++q) {
      out.expected_quintile_distance[q] = members[q] > 0 ? sum[q] / static_cast<double>(members[q]) : 0.0;
    }
  }
  return out;
}

void write_scenario(const std::filesystem::path& dir, const Scenario& scenario)
{
  std::filesystem::create_directories(dir);
  write_zones(dir / DatasetFiles::zones, scenario.zones);
  write_od(dir / DatasetFiles::od, scenario.od, scenario.zones);
  write_network(dir / DatasetFiles::nodes, dir / DatasetFiles::edges, scenario.network);
  write_mask(dir / DatasetFiles::residential_mask, scenario.residential_mask);
  write_mask(dir / DatasetFiles::job_mask, scenario.job_mask);
  write_crosswalk(dir / DatasetFiles::crosswalk, scenario.crosswalk);

  json truth;
  truth["config"] = json::parse(config_to_json(scenario.config));
  truth["expected_quintile_distance"] = scenario.expected_quintile_distance;
  json per_zone = json::object();
  for (std::size_t z = 0; z < scenario.zones.size(); ++z) {
    per_zone[scenario.zones[z].id] = scenario.expected_zone_distance[z];
  }
  truth["expected_zone_distance"] = per_zone;
  text::write_file(dir / DatasetFiles::scenario, truth.dump(2) + "\n");

  json run;
  run["zones"] = DatasetFiles::zones;
  run["od"] = DatasetFiles::od;
  run["nodes"] = DatasetFiles::nodes;
  run["edges"] = DatasetFiles::edges;
  run["residential_mask"] = DatasetFiles::residential_mask;
  run["job_mask"] = DatasetFiles::job_mask;
  run["crosswalk"] = DatasetFiles::crosswalk;
  run["unit"] = scenario.config.unit;
  run["seed"] = scenario.config.seed;
  run["snap_legs"] = "on";
  run["fallback_cellsize"] = scenario.residential_mask.cellsize();
  run["flag_weight"] = "workers";
  run["strict"] = true;
  run["out"] = "run";
  text::write_file(dir / DatasetFiles::run_config, run.dump(2) + "\n");
}

std::vector<std::vector<double>> oracle_all_pairs(const RoadNetwork& network)
{
  const std::size_t n = network.node_count();
  if (n > kOracleMaxNodes) {
    throw std::invalid_argument("oracle_all_pairs refuses " + std::to_string(n) + " nodes (limit " +
                                std::to_string(kOracleMaxNodes) + ")");
  }
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<std::vector<double>> d(n, std::vector<double>(n, inf));
  for (std::size_t i = 0; i < n; ++i) {
    d[i][i] = 0.0;
    for (const Arc& a : network.arcs_from(i)) d[i][a.target] = std::min(d[i][a.target], a.length);
  }
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t i = 0; i < n; ++i) {
      if (d[i][k] == inf) continue;
      for (std::size_t j = 0; j < n; ++j) {
        const double via = d[i][k] + d[k][j];
        if (via < d[i][j]) d[i][j] = via;
      }
    }
  }
  return d;
}

std::vector<double> oracle_ols(std::span<const std::vector<double>> columns, std::span<const double> y,
                               std::span<const double> weights)
{
  __extension__ typedef __float128 quad;
  const std::size_t p = columns.size();
  const std::size_t n = y.size();
  if (p == 0) throw std::domain_error("empty design");
  for (const auto& c : columns) {
    if (c.size() != n) throw std::invalid_argument("design column length mismatch");
  }
  if (!weights.empty() && weights.size() != n) throw std::invalid_argument("weight length mismatch");

  // Augmented normal equations [X'WX | X'Wy].
  std::vector<std::vector<quad>> a(p, std::vector<quad>(p + 1, 0));
  for (std::size_t r = 0; r < n; ++r) {
    const quad w = weights.empty() ? quad(1) : quad(weights[r]);
    for (std::size_t i = 0; i < p; ++i) {
      const quad xi = w * quad(columns[i][r]);
      for (std::size_t j = 0; j < p; ++j) a[i][j] += xi * quad(columns[j][r]);
      a[i][p] += xi * quad(y[r]);
    }
  }

  auto magnitude = [](quad v) { return v < 0 ? -v : v; };
  quad scale = 0;
  for (std::size_t i = 0; i < p; ++i) scale = std::max(scale, magnitude(a[i][i]));
  std::vector<std::size_t> var(p);
  std::iota(var.begin(), var.end(), std::size_t{0});
  for (std::size_t k = 0; k < p; ++k) {
    std::size_t pr = k;
    std::size_t pc = k;
    quad best = -1;
    for (std::size_t i = k; i < p; ++i) {
      for (std::size_t j = k; j < p; ++j) {
        if (magnitude(a[i][j]) > best) {
          best = magnitude(a[i][j]);
          pr = i;
          pc = j;
        }
      }
    }
    if (!(best > scale * quad(1e-28))) throw std::domain_error("rank-deficient design");
    std::swap(a[k], a[pr]);
    if (pc != k) {
      for (auto& row : a) std::swap(row[k], row[pc]);
      std::swap(var[k], var[pc]);
    }
    for (std::size_t i = k + 1; i < p; ++i) {
      const quad f = a[i][k] / a[k][k];
      for (std::size_t j = k; j <= p; ++j) a[i][j] -= f * a[k][j];
    }
  }
  std::vector<quad> sol(p, 0);
  for (std::size_t k = p; k-- > 0;) {
    quad acc = a[k][p];
    for (std::size_t j = k + 1; j < p; ++j) acc -= a[k][j] * sol[j];
    sol[k] = acc / a[k][k];
  }
  std::vector<double> out(p);
  for (std::size_t k = 0; k < p; ++k) out[var[k]] = static_cast<double>(sol[k]);
  return out;
}

}  // namespace commute::synth
