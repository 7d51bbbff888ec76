#include "commute/geodata.hpp"

#include "commute/text_io.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace commute {

using nlohmann::json;

std::string_view to_string(Severity s)
{
  return s == Severity::error ? "error" : "warning";
}

bool ValidationReport::has_errors() const
{
  return count(Severity::error) > 0;
}

std::size_t ValidationReport::count(Severity s) const
{
  return static_cast<std::size_t>(
      std::count_if(findings.begin(), findings.end(), [s](const Finding& f) { return f.severity == s; }));
}

DataError::DataError(const std::string& what, std::vector<Finding> findings)
    : std::runtime_error(what), findings_(std::move(findings))
{
}

namespace {

[[noreturn]] void raise(const std::string& source, std::vector<Finding> findings)
{
  std::ostringstream os;
  os << source << ": " << findings.size() << " problem(s)";
  if (!findings.empty()) os << "; first: " << findings.front().message;
  throw DataError(os.str(), std::move(findings));
}

Finding error(std::string code, std::string message, std::vector<std::string> ids = {})
{
  return {Severity::error, std::move(code), std::move(message), std::move(ids)};
}

}  // namespace

// ---------------------------------------------------------------------------
// ZoneSet / ODMatrix / RoadNetwork / RasterMask
// ---------------------------------------------------------------------------

ZoneSet::ZoneSet(std::vector<Zone> zones, std::string unit, std::string year)
    : zones_(std::move(zones)), unit_(std::move(unit)), year_(std::move(year))
{
  std::sort(zones_.begin(), zones_.end(), [](const Zone& a, const Zone& b) { return a.id < b.id; });
  std::vector<Finding> findings;
  for (std::size_t i = 0; i < zones_.size(); ++i) {
    if (!index_.emplace(zones_[i].id, i).second) {
      findings.push_back(error("duplicate_zone_id", "duplicate zone id '" + zones_[i].id + "'", {zones_[i].id}));
    }
  }
  if (!findings.empty()) raise("zones", std::move(findings));
}

std::optional<std::size_t> ZoneSet::find(std::string_view id) const
{
  const auto it = index_.find(std::string(id));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

ODMatrix::ODMatrix(std::vector<OdFlow> flows, std::size_t zone_count)
    : flows_(std::move(flows)), zone_count_(zone_count)
{
  std::sort(flows_.begin(), flows_.end(), [](const OdFlow& a, const OdFlow& b) {
    return std::pair(a.origin, a.dest) < std::pair(b.origin, b.dest);
  });
  std::vector<Finding> findings;
  for (std::size_t i = 0; i < flows_.size(); ++i) {
    const OdFlow& f = flows_[i];
    const std::string key = std::to_string(f.origin) + "->" + std::to_string(f.dest);
    if (f.origin >= zone_count_ || f.dest >= zone_count_) {
      findings.push_back(error("unknown_zone", "flow references zone index out of range: " + key));
    }
    if (f.commuters < 0) findings.push_back(error("negative_commuters", "negative commuters for " + key));
    if (f.mean_time_min && !(*f.mean_time_min >= 0.0)) {
      findings.push_back(error("negative_time", "negative mean time for " + key));
    }
    if (i > 0 && flows_[i - 1].origin == f.origin && flows_[i - 1].dest == f.dest) {
      findings.push_back(error("duplicate_pair", "duplicate flow " + key));
    }
    total_ += std::max<std::int64_t>(f.commuters, 0);
  }
  if (findings.empty() && total_ <= 0) {
    findings.push_back(error("empty_od", "total commuters must be positive"));
  }
  if (!findings.empty()) raise("od", std::move(findings));
}

const OdFlow* ODMatrix::find(std::size_t origin, std::size_t dest) const
{
  const auto it = std::lower_bound(flows_.begin(), flows_.end(), std::pair(origin, dest),
                                   [](const OdFlow& f, const std::pair<std::size_t, std::size_t>& key) {
                                     return std::pair(f.origin, f.dest) < key;
                                   });
  if (it == flows_.end() || it->origin != origin || it->dest != dest) return nullptr;
  return &*it;
}

std::vector<std::int64_t> ODMatrix::row_sums() const
{
  std::vector<std::int64_t> sums(zone_count_, 0);
  for (const auto& f : flows_) sums[f.origin] += f.commuters;
  return sums;
}

std::vector<std::int64_t> ODMatrix::column_sums() const
{
  std::vector<std::int64_t> sums(zone_count_, 0);
  for (const auto& f : flows_) sums[f.dest] += f.commuters;
  return sums;
}

RoadNetwork::RoadNetwork(std::vector<RoadNode> nodes, std::vector<RoadEdge> edges)
    : nodes_(std::move(nodes)), edges_(std::move(edges))
{
  std::sort(nodes_.begin(), nodes_.end(), [](const RoadNode& a, const RoadNode& b) { return a.id < b.id; });
  std::vector<Finding> findings;
  for (std::size_t i = 1; i < nodes_.size(); ++i) {
    if (nodes_[i].id == nodes_[i - 1].id) {
      findings.push_back(error("duplicate_node", "duplicate node id " + std::to_string(nodes_[i].id),
                               {std::to_string(nodes_[i].id)}));
    }
  }
  if (nodes_.size() >= std::numeric_limits<std::uint32_t>::max()) {
    findings.push_back(error("too_many_nodes", "network exceeds 2^32-1 nodes"));
  }

  std::vector<std::size_t> degree(nodes_.size() + 1, 0);
  std::vector<std::pair<std::size_t, std::size_t>> resolved(edges_.size());
  for (std::size_t e = 0; e < edges_.size(); ++e) {
    const RoadEdge& edge = edges_[e];
    const auto from = index_of(edge.from);
    const auto to = index_of(edge.to);
    const std::string label = std::to_string(edge.from) + "-" + std::to_string(edge.to);
    if (!from || !to) {
      findings.push_back(error("dangling_node", "edge " + label + " references a missing node", {label}));
      continue;
    }
    if (!std::isfinite(edge.length) || edge.length < 0.0) {
      findings.push_back(error("negative_length", "edge " + label + " has invalid length", {label}));
      continue;
    }
    resolved[e] = {*from, *to};
    ++degree[*from];
    if (edge.bidirectional) ++degree[*to];
  }
  if (!findings.empty()) raise("network", std::move(findings));

  offsets_.assign(nodes_.size() + 1, 0);
  for (std::size_t i = 0; i < nodes_.size(); ++i) offsets_[i + 1] = offsets_[i] + degree[i];
  arcs_.resize(offsets_.back());
  std::vector<std::size_t> cursor(offsets_.begin(), offsets_.end() - 1);
  for (std::size_t e = 0; e < edges_.size(); ++e) {
    const auto [from, to] = resolved[e];
    arcs_[cursor[from]++] = {static_cast<std::uint32_t>(to), edges_[e].length};
    if (edges_[e].bidirectional) arcs_[cursor[to]++] = {static_cast<std::uint32_t>(from), edges_[e].length};
  }
}

std::optional<std::size_t> RoadNetwork::index_of(std::int64_t node_id) const
{
  const auto it = std::lower_bound(nodes_.begin(), nodes_.end(), node_id,
                                   [](const RoadNode& n, std::int64_t id) { return n.id < id; });
  if (it == nodes_.end() || it->id != node_id) return std::nullopt;
  return static_cast<std::size_t>(it - nodes_.begin());
}

RasterMask::RasterMask(std::size_t ncols, std::size_t nrows, double xllcorner, double yllcorner, double cellsize,
                       std::optional<double> nodata_value, std::vector<double> values)
    : ncols_(ncols), nrows_(nrows), xll_(xllcorner), yll_(yllcorner), cellsize_(cellsize), nodata_(nodata_value)
{
  std::vector<Finding> findings;
  if (ncols == 0 || nrows == 0) findings.push_back(error("bad_header", "ncols and nrows must be positive"));
  if (!(cellsize > 0.0) || !std::isfinite(cellsize)) {
    findings.push_back(error("bad_header", "cellsize must be positive"));
  }
  if (values.size() != ncols * nrows) {
    findings.push_back(error("dimension_mismatch", "header declares " + std::to_string(ncols * nrows) +
                                                       " cells but body has " + std::to_string(values.size())));
  }
  if (!findings.empty()) raise("mask", std::move(findings));

  weights_.resize(values.size());
  nodata_flags_.assign(values.size(), 0);
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (nodata_ && values[i] == *nodata_) {
      nodata_flags_[i] = 1;
      weights_[i] = 0.0;
      continue;
    }
    if (!std::isfinite(values[i]) || values[i] < 0.0) {
      findings.push_back(error("negative_weight", "cell (row " + std::to_string(i / ncols) + ", col " +
                                                      std::to_string(i % ncols) + ") has invalid weight"));
      continue;
    }
    weights_[i] = values[i];
  }
  if (!findings.empty()) raise("mask", std::move(findings));
}

BBox RasterMask::cell_box(std::size_t row, std::size_t col) const
{
  const double x0 = xll_ + static_cast<double>(col) * cellsize_;
  const double y0 = yll_ + static_cast<double>(nrows_ - 1 - row) * cellsize_;
  return {x0, y0, x0 + cellsize_, y0 + cellsize_};
}

BBox RasterMask::extent() const
{
  return {xll_, yll_, xll_ + static_cast<double>(ncols_) * cellsize_, yll_ + static_cast<double>(nrows_) * cellsize_};
}

std::size_t RasterMask::positive_cells() const
{
  return static_cast<std::size_t>(std::count_if(weights_.begin(), weights_.end(), [](double w) { return w > 0.0; }));
}

// ---------------------------------------------------------------------------
// GeoJSON zones
// ---------------------------------------------------------------------------

namespace {

std::optional<std::int64_t> json_count(const json& v)
{
  if (v.is_number_integer()) return v.get<std::int64_t>();
  if (v.is_number_unsigned()) {
    const auto u = v.get<std::uint64_t>();
    if (u > static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max())) return std::nullopt;
    return static_cast<std::int64_t>(u);
  }
  if (v.is_number_float()) {
    const double d = v.get<double>();
    if (std::isfinite(d) && d == std::floor(d) && std::abs(d) < 9.0e15) return static_cast<std::int64_t>(d);
  }
  return std::nullopt;
}

Ring parse_ring(const json& coords)
{
  Ring ring;
  if (!coords.is_array()) throw std::runtime_error("ring is not an array");
  ring.reserve(coords.size());
  for (const auto& pt : coords) {
    if (!pt.is_array() || pt.size() < 2 || !pt[0].is_number() || !pt[1].is_number()) {
      throw std::runtime_error("malformed coordinate");
    }
    ring.push_back({pt[0].get<double>(), pt[1].get<double>()});
  }
  return ring;
}

Polygon parse_polygon(const json& coords)
{
  if (!coords.is_array() || coords.empty()) throw std::runtime_error("polygon has no rings");
  Polygon polygon;
  for (const auto& ring : coords) polygon.push_back(parse_ring(ring));
  return polygon;
}

MultiPolygon parse_geometry(const json& geometry)
{
  if (!geometry.is_object()) throw std::runtime_error("missing geometry");
  const std::string type = geometry.value("type", "");
  const json& coords = geometry.at("coordinates");
  if (type == "Polygon") return {parse_polygon(coords)};
  if (type == "MultiPolygon") {
    MultiPolygon shape;
    for (const auto& poly : coords) shape.push_back(parse_polygon(poly));
    if (shape.empty()) throw std::runtime_error("empty multipolygon");
    return shape;
  }
  throw std::runtime_error("unsupported geometry type '" + type + "'");
}

json ring_to_json(const Ring& ring)
{
  json out = json::array();
  for (const auto& p : ring) out.push_back({p.x, p.y});
  return out;
}

json polygon_to_json(const Polygon& polygon)
{
  json out = json::array();
  for (const auto& ring : polygon) out.push_back(ring_to_json(ring));
  return out;
}

}  // namespace

ZoneSet load_zones(const std::filesystem::path& path, const std::string& unit)
{
  json doc;
  try {
    doc = json::parse(text::read_file(path));
  } catch (const std::exception& e) {
    raise(path.string(), {error("unparsable", std::string("cannot parse GeoJSON: ") + e.what())});
  }
  if (!doc.is_object() || doc.value("type", "") != "FeatureCollection" || !doc.contains("features") ||
      !doc["features"].is_array()) {
    raise(path.string(), {error("unparsable", "not a GeoJSON FeatureCollection")});
  }

  std::vector<Finding> findings;
  std::vector<Zone> zones;
  std::set<std::string> seen;
  const json& features = doc["features"];
  for (std::size_t f = 0; f < features.size(); ++f) {
    const json& feature = features[f];
    const std::string where = "feature " + std::to_string(f);
    const json props = feature.is_object() && feature.contains("properties") && feature["properties"].is_object()
                           ? feature["properties"]
                           : json::object();

    Zone zone;
    if (!props.contains("id") || !props["id"].is_string() || props["id"].get<std::string>().empty()) {
      findings.push_back(error("missing_id", where + ": missing or non-string property 'id'", {where}));
      continue;
    }
    zone.id = props["id"].get<std::string>();
    const std::vector<std::string> ids{zone.id};
    const std::string label = where + " (zone " + zone.id + ")";
    if (!seen.insert(zone.id).second) {
      findings.push_back(error("duplicate_zone_id", label + ": duplicate id", ids));
      continue;
    }

    bool ok = true;
    auto read_count = [&](std::string_view key, std::int64_t& out) {
      const std::string k(key);
      if (!props.contains(k)) {
        findings.push_back(error("missing_property", label + ": missing property '" + k + "'", ids));
        ok = false;
        return;
      }
      const auto v = json_count(props[k]);
      if (!v) {
        findings.push_back(error("bad_property", label + ": property '" + k + "' is not an integer", ids));
        ok = false;
      } else if (*v < 0) {
        findings.push_back(error("negative_count", label + ": property '" + k + "' is negative", ids));
        ok = false;
      } else {
        out = *v;
      }
    };

    read_count("workers", zone.resident_workers);
    read_count("jobs", zone.jobs);
    for (std::size_t b = 0; b < kWageBinCount; ++b) read_count(kWageBinProperties[b], zone.wage_bins[b]);
    for (std::size_t m = 0; m < kModeCount; ++m) read_count(kModeProperties[m], zone.mode_counts[m]);

    if (!props.contains("mean_wage")) {
      findings.push_back(error("missing_property", label + ": missing property 'mean_wage'", ids));
      ok = false;
    } else if (props["mean_wage"].is_number()) {
      const double w = props["mean_wage"].get<double>();
      if (!std::isfinite(w) || w < 0.0) {
        findings.push_back(error("negative_wage", label + ": mean_wage must be >= 0", ids));
        ok = false;
      } else {
        zone.mean_wage = w;
      }
    } else if (!props["mean_wage"].is_null()) {
      findings.push_back(error("bad_property", label + ": mean_wage is not a number", ids));
      ok = false;
    }

    if (props.contains("population") && !props["population"].is_null()) {
      std::int64_t pop = 0;
      read_count("population", pop);
      zone.population = pop;
    }

    try {
      zone.shape = parse_geometry(feature.is_object() && feature.contains("geometry") ? feature["geometry"] : json());
      for (const auto& polygon : zone.shape) {
        for (const auto& ring : polygon) {
          if (!ring_is_closed(ring)) {
            findings.push_back(error("unclosed_ring", label + ": ring is not closed", ids));
            ok = false;
          } else if (ring_self_intersects(ring)) {
            findings.push_back(error("self_intersecting_ring", label + ": ring self-intersects", ids));
            ok = false;
          }
        }
      }
    } catch (const std::exception& e) {
      findings.push_back(error("bad_geometry", label + ": " + e.what(), ids));
      ok = false;
    }

    if (ok) zones.push_back(std::move(zone));
  }

  if (!findings.empty()) raise(path.string(), std::move(findings));
  std::string year;
  if (doc.contains("year") && doc["year"].is_string()) year = doc["year"].get<std::string>();
  return ZoneSet(std::move(zones), unit, std::move(year));
}

void write_zones(const std::filesystem::path& path, const ZoneSet& zones)
{
  json doc;
  doc["type"] = "FeatureCollection";
  doc["unit"] = zones.unit();
  doc["year"] = zones.year();
  json features = json::array();
  for (const Zone& z : zones.zones()) {
    json props;
    props["id"] = z.id;
    props["workers"] = z.resident_workers;
    props["jobs"] = z.jobs;
    props["mean_wage"] = z.mean_wage ? json(*z.mean_wage) : json(nullptr);
    for (std::size_t b = 0; b < kWageBinCount; ++b) props[std::string(kWageBinProperties[b])] = z.wage_bins[b];
    for (std::size_t m = 0; m < kModeCount; ++m) props[std::string(kModeProperties[m])] = z.mode_counts[m];
    if (z.population) props["population"] = *z.population;

    json geometry;
    if (z.shape.size() == 1) {
      geometry["type"] = "Polygon";
      geometry["coordinates"] = polygon_to_json(z.shape.front());
    } else {
      geometry["type"] = "MultiPolygon";
      json coords = json::array();
      for (const auto& poly : z.shape) coords.push_back(polygon_to_json(poly));
      geometry["coordinates"] = std::move(coords);
    }
    features.push_back({{"type", "Feature"}, {"properties", std::move(props)}, {"geometry", std::move(geometry)}});
  }
  doc["features"] = std::move(features);
  text::write_file(path, doc.dump(1) + "\n");
}

// ---------------------------------------------------------------------------
// OD flows
// ---------------------------------------------------------------------------

ODMatrix load_od(const std::filesystem::path& path, const ZoneSet& zones)
{
  text::CsvTable table;
  try {
    table = text::read_csv(path);
  } catch (const std::exception& e) {
    raise(path.string(), {error("unparsable", e.what())});
  }
  const std::size_t c_origin = table.column("origin_id");
  const std::size_t c_dest = table.column("dest_id");
  const std::size_t c_count = table.column("commuters");
  const std::size_t c_time = table.column("mean_time_min");
  const std::size_t width = std::max({c_origin, c_dest, c_count}) + 1;

  std::vector<Finding> findings;
  std::vector<OdFlow> flows;
  std::set<std::pair<std::size_t, std::size_t>> seen;
  for (const auto& row : table.rows) {
    const std::string where = "line " + std::to_string(row.line);
    if (row.fields.size() < width) {
      findings.push_back(error("unparsable", where + ": too few columns"));
      continue;
    }
    const std::string& o = row.fields[c_origin];
    const std::string& d = row.fields[c_dest];
    const auto oi = zones.find(o);
    const auto di = zones.find(d);
    bool ok = true;
    if (!oi) {
      findings.push_back(error("unknown_zone", where + ": unknown origin zone '" + o + "'", {o}));
      ok = false;
    }
    if (!di) {
      findings.push_back(error("unknown_zone", where + ": unknown destination zone '" + d + "'", {d}));
      ok = false;
    }
    const auto count = text::parse_int(row.fields[c_count]);
    if (!count) {
      findings.push_back(error("unparsable", where + ": commuters is not an integer", {o, d}));
      ok = false;
    } else if (*count < 0) {
      findings.push_back(error("negative_commuters", where + ": negative commuters", {o, d}));
      ok = false;
    }
    std::optional<double> time;
    if (c_time < row.fields.size() && !row.fields[c_time].empty()) {
      time = text::parse_double(row.fields[c_time]);
      if (!time || *time < 0.0) {
        findings.push_back(error("bad_time", where + ": mean_time_min must be a non-negative number", {o, d}));
        ok = false;
      }
    }
    if (!ok) continue;
    if (!seen.emplace(*oi, *di).second) {
      findings.push_back(error("duplicate_pair", where + ": duplicate pair " + o + "->" + d, {o, d}));
      continue;
    }
    flows.push_back({*oi, *di, *count, time});
  }
  if (!findings.empty()) raise(path.string(), std::move(findings));
  try {
    return ODMatrix(std::move(flows), zones.size());
  } catch (const DataError& e) {
    raise(path.string(), e.findings());
  }
}

void write_od(const std::filesystem::path& path, const ODMatrix& od, const ZoneSet& zones)
{
  std::string out = "origin_id,dest_id,commuters,mean_time_min\n";
  for (const auto& f : od.flows()) {
    out += zones[f.origin].id;
    out += ',';
    out += zones[f.dest].id;
    out += ',';
    out += std::to_string(f.commuters);
    out += ',';
    if (f.mean_time_min) out += text::format_double(*f.mean_time_min);
    out += '\n';
  }
  text::write_file(path, out);
}

// ---------------------------------------------------------------------------
// Network
// ---------------------------------------------------------------------------

RoadNetwork load_network(const std::filesystem::path& nodes_path, const std::filesystem::path& edges_path)
{
  std::vector<Finding> findings;
  std::vector<RoadNode> nodes;
  std::vector<RoadEdge> edges;

  text::CsvTable node_table;
  text::CsvTable edge_table;
  try {
    node_table = text::read_csv(nodes_path);
    edge_table = text::read_csv(edges_path);
  } catch (const std::exception& e) {
    raise("network", {error("unparsable", e.what())});
  }

  {
    const std::size_t c_id = node_table.column("node_id");
    const std::size_t c_x = node_table.column("x");
    const std::size_t c_y = node_table.column("y");
    for (const auto& row : node_table.rows) {
      const std::string where = nodes_path.filename().string() + " line " + std::to_string(row.line);
      const auto id = c_id < row.fields.size() ? text::parse_int(row.fields[c_id]) : std::nullopt;
      const auto x = c_x < row.fields.size() ? text::parse_double(row.fields[c_x]) : std::nullopt;
      const auto y = c_y < row.fields.size() ? text::parse_double(row.fields[c_y]) : std::nullopt;
      if (!id || !x || !y) {
        findings.push_back(error("unparsable", where + ": malformed node row"));
        continue;
      }
      nodes.push_back({*id, {*x, *y}});
    }
  }
  {
    const std::size_t c_from = edge_table.column("from_node");
    const std::size_t c_to = edge_table.column("to_node");
    const std::size_t c_len = edge_table.column("length");
    const std::size_t c_bi = edge_table.column("bidirectional");
    for (const auto& row : edge_table.rows) {
      const std::string where = edges_path.filename().string() + " line " + std::to_string(row.line);
      auto field = [&](std::size_t c) { return c < row.fields.size() ? row.fields[c] : std::string(); };
      const auto from = text::parse_int(field(c_from));
      const auto to = text::parse_int(field(c_to));
      const auto len = text::parse_double(field(c_len));
      const auto bi = text::parse_int(field(c_bi));
      if (!from || !to || !len || !bi || (*bi != 0 && *bi != 1)) {
        findings.push_back(error("unparsable", where + ": malformed edge row"));
        continue;
      }
      edges.push_back({*from, *to, *len, *bi == 1});
    }
  }
  if (!findings.empty()) raise("network", std::move(findings));
  return RoadNetwork(std::move(nodes), std::move(edges));
}

void write_network(const std::filesystem::path& nodes_path, const std::filesystem::path& edges_path,
                   const RoadNetwork& network)
{
  std::string nodes = "node_id,x,y\n";
  for (const auto& n : network.nodes()) {
    nodes += std::to_string(n.id) + ',' + text::format_double(n.position.x) + ',' +
             text::format_double(n.position.y) + '\n';
  }
  std::string edges = "from_node,to_node,length,bidirectional\n";
  for (const auto& e : network.edges()) {
    edges += std::to_string(e.from) + ',' + std::to_string(e.to) + ',' + text::format_double(e.length) + ',' +
             (e.bidirectional ? "1" : "0") + '\n';
  }
  text::write_file(nodes_path, nodes);
  text::write_file(edges_path, edges);
}

// ---------------------------------------------------------------------------
// ESRI ASCII grid
// ---------------------------------------------------------------------------

RasterMask load_mask(const std::filesystem::path& path)
{
  std::ifstream in(path);
  if (!in) raise(path.string(), {error("unparsable", "cannot open file")});

  std::optional<std::int64_t> ncols, nrows;
  std::optional<double> xll, yll, cellsize, nodata;
  bool x_center = false;
  bool y_center = false;
  std::vector<double> values;

  std::string token;
  std::vector<Finding> findings;
  // Header: keyword/value pairs until the first numeric token.
  while (in >> token) {
    std::string key = token;
    std::transform(key.begin(), key.end(), key.begin(), [](unsigned char c) { return std::tolower(c); });
    if (!key.empty() && (std::isdigit(static_cast<unsigned char>(key[0])) || key[0] == '-' || key[0] == '+' ||
                         key[0] == '.')) {
      const auto v = text::parse_double(token);
      if (!v) {
        findings.push_back(error("unparsable", "bad cell value '" + token + "'"));
      } else {
        values.push_back(*v);
      }
      break;
    }
    std::string value;
    if (!(in >> value)) {
      findings.push_back(error("unparsable", "header keyword '" + token + "' has no value"));
      break;
    }
    if (key == "ncols") {
      ncols = text::parse_int(value);
    } else if (key == "nrows") {
      nrows = text::parse_int(value);
    } else if (key == "xllcorner" || key == "xllcenter") {
      xll = text::parse_double(value);
      x_center = key == "xllcenter";
    } else if (key == "yllcorner" || key == "yllcenter") {
      yll = text::parse_double(value);
      y_center = key == "yllcenter";
    } else if (key == "cellsize") {
      cellsize = text::parse_double(value);
    } else if (key == "nodata_value") {
      nodata = text::parse_double(value);
      if (!nodata) findings.push_back(error("bad_header", "NODATA_VALUE is not a number"));
    } else {
      findings.push_back(error("bad_header", "unknown header keyword '" + token + "'"));
    }
  }
  while (in >> token) {
    const auto v = text::parse_double(token);
    if (!v) {
      findings.push_back(error("unparsable", "bad cell value '" + token + "'"));
      continue;
    }
    values.push_back(*v);
  }
  if (!ncols || !nrows || !xll || !yll || !cellsize) {
    findings.push_back(error("bad_header", "header must define NCOLS, NROWS, XLLCORNER, YLLCORNER, CELLSIZE"));
  } else if (*ncols <= 0 || *nrows <= 0) {
    findings.push_back(error("bad_header", "NCOLS and NROWS must be positive"));
  }
  if (!findings.empty()) raise(path.string(), std::move(findings));

  if (x_center) *xll -= 0.5 * *cellsize;
  if (y_center) *yll -= 0.5 * *cellsize;
  try {
    return RasterMask(static_cast<std::size_t>(*ncols), static_cast<std::size_t>(*nrows), *xll, *yll, *cellsize,
                      nodata, std::move(values));
  } catch (const DataError& e) {
    raise(path.string(), e.findings());
  }
}

void write_mask(const std::filesystem::path& path, const RasterMask& mask)
{
  std::string out;
  out += "NCOLS " + std::to_string(mask.ncols()) + "\n";
  out += "NROWS " + std::to_string(mask.nrows()) + "\n";
  out += "XLLCORNER " + text::format_double(mask.xllcorner()) + "\n";
  out += "YLLCORNER " + text::format_double(mask.yllcorner()) + "\n";
  out += "CELLSIZE " + text::format_double(mask.cellsize()) + "\n";
  if (mask.nodata_value()) out += "NODATA_VALUE " + text::format_double(*mask.nodata_value()) + "\n";
  for (std::size_t r = 0; r < mask.nrows(); ++r) {
    for (std::size_t c = 0; c < mask.ncols(); ++c) {
      if (c > 0) out += ' ';
      out += mask.is_nodata(r, c) ? text::format_double(*mask.nodata_value()) : text::format_double(mask.weight(r, c));
    }
    out += '\n';
  }
  text::write_file(path, out);
}

// ---------------------------------------------------------------------------
// Crosswalk
// ---------------------------------------------------------------------------

Crosswalk load_crosswalk(const std::filesystem::path& path)
{
  text::CsvTable table;
  try {
    table = text::read_csv(path);
  } catch (const std::exception& e) {
    raise(path.string(), {error("unparsable", e.what())});
  }
  const std::size_t c_child = table.column("child_id");
  const std::size_t c_parent = table.column("parent_id");
  Crosswalk out;
  std::vector<Finding> findings;
  for (const auto& row : table.rows) {
    const std::string where = "line " + std::to_string(row.line);
    if (row.fields.size() <= std::max(c_child, c_parent)) {
      findings.push_back(error("unparsable", where + ": too few columns"));
      continue;
    }
    const std::string& child = row.fields[c_child];
    if (!out.emplace(child, row.fields[c_parent]).second) {
      findings.push_back(error("duplicate_child", where + ": child '" + child + "' mapped twice", {child}));
    }
  }
  if (!findings.empty()) raise(path.string(), std::move(findings));
  return out;
}

void write_crosswalk(const std::filesystem::path& path, const Crosswalk& crosswalk)
{
  std::string out = "child_id,parent_id\n";
  for (const auto& [child, parent] : crosswalk) out += child + ',' + parent + '\n';
  text::write_file(path, out);
}

// ---------------------------------------------------------------------------
// Consistency and aggregation
// ---------------------------------------------------------------------------

ValidationReport validate_consistency(const ZoneSet& zones, const ODMatrix& od, Strictness strictness)
{
  ValidationReport report;
  const Severity margin = strictness == Strictness::strict ? Severity::error : Severity::warning;
  const auto rows = od.row_sums();
  const auto cols = od.column_sums();
  for (std::size_t i = 0; i < zones.size(); ++i) {
    const Zone& z = zones[i];
    const std::int64_t row = i < rows.size() ? rows[i] : 0;
    const std::int64_t col = i < cols.size() ? cols[i] : 0;
    if (row != z.resident_workers) {
      const std::int64_t delta = z.resident_workers - row;
      report.findings.push_back({margin, "row_margin",
                                 "zone " + z.id + ": workers " + std::to_string(z.resident_workers) +
                                     " vs outgoing flow " + std::to_string(row) + " (delta " + std::to_string(delta) +
                                     ")",
                                 {z.id}});
    }
    if (col != z.jobs) {
      const std::int64_t delta = z.jobs - col;
      report.findings.push_back({margin, "column_margin",
                                 "zone " + z.id + ": jobs " + std::to_string(z.jobs) + " vs incoming flow " +
                                     std::to_string(col) + " (delta " + std::to_string(delta) + ")",
                                 {z.id}});
    }
    if (z.resident_workers == 0 && row > 0) {
      report.findings.push_back({margin, "zero_workers_with_flow",
                                 "zone " + z.id + " declares no resident workers but originates " +
                                     std::to_string(row) + " commuters",
                                 {z.id}});
    }
    if (z.jobs == 0 && col > 0) {
      report.findings.push_back({margin, "zero_jobs_with_flow",
                                 "zone " + z.id + " declares no jobs but receives " + std::to_string(col) +
                                     " commuters",
                                 {z.id}});
    }
  }
  return report;
}

AggregatedData aggregate_crosswalk(const ZoneSet& zones, const ODMatrix& od, const Crosswalk& crosswalk)
{
  std::vector<Finding> findings;
  for (const auto& [child, parent] : crosswalk) {
    if (!zones.find(child)) findings.push_back(error("unknown_child", "crosswalk child '" + child + "' is not a zone", {child}));
    if (parent.empty()) findings.push_back(error("unknown_parent", "child '" + child + "' maps to an empty parent", {child}));
  }
  std::vector<std::string> parent_of(zones.size());
  for (std::size_t i = 0; i < zones.size(); ++i) {
    const auto it = crosswalk.find(zones[i].id);
    if (it == crosswalk.end()) {
      findings.push_back(error("unmapped_child", "zone '" + zones[i].id + "' has no crosswalk entry", {zones[i].id}));
      continue;
    }
    parent_of[i] = it->second;
  }
  if (!findings.empty()) raise("crosswalk", std::move(findings));

  std::map<std::string, std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < zones.size(); ++i) members[parent_of[i]].push_back(i);

  std::vector<Zone> parents;
  for (const auto& [parent_id, kids] : members) {
    Zone p;
    p.id = parent_id;
    double wage_weighted = 0.0;
    double wage_plain = 0.0;
    std::int64_t wage_workers = 0;
    std::size_t wage_n = 0;
    bool all_population = true;
    std::int64_t population = 0;
    for (const std::size_t k : kids) {
      const Zone& c = zones[k];
      p.resident_workers += c.resident_workers;
      p.jobs += c.jobs;
      for (std::size_t b = 0; b < kWageBinCount; ++b) p.wage_bins[b] += c.wage_bins[b];
      for (std::size_t m = 0; m < kModeCount; ++m) p.mode_counts[m] += c.mode_counts[m];
      for (const auto& poly : c.shape) p.shape.push_back(poly);
      if (c.mean_wage) {
        wage_weighted += *c.mean_wage * static_cast<double>(c.resident_workers);
        wage_plain += *c.mean_wage;
        wage_workers += c.resident_workers;
        ++wage_n;
      }
      if (c.population) {
        population += *c.population;
      } else {
        all_population = false;
      }
    }
    if (kids.size() == 1) {
      p.mean_wage = zones[kids.front()].mean_wage;
    } else if (wage_workers > 0) {
      p.mean_wage = wage_weighted / static_cast<double>(wage_workers);
    } else if (wage_n > 0) {
      p.mean_wage = wage_plain / static_cast<double>(wage_n);
    }
    if (all_population) p.population = population;
    parents.push_back(std::move(p));
  }
  ZoneSet parent_set(std::move(parents), zones.unit(), zones.year());

  struct PairAccum
  {
    std::int64_t commuters = 0;
    double time_weighted = 0.0;
    std::int64_t time_weight = 0;
    double time_plain = 0.0;
    std::size_t time_n = 0;
    std::optional<double> single_time;
    std::size_t flow_n = 0;
  };
  std::map<std::pair<std::size_t, std::size_t>, PairAccum> pairs;
  for (const auto& f : od.flows()) {
    const std::size_t po = *parent_set.find(parent_of[f.origin]);
    const std::size_t pd = *parent_set.find(parent_of[f.dest]);
    PairAccum& acc = pairs[{po, pd}];
    acc.commuters += f.commuters;
    acc.single_time = f.mean_time_min;
    ++acc.flow_n;
    if (f.mean_time_min) {
      acc.time_weighted += *f.mean_time_min * static_cast<double>(f.commuters);
      acc.time_weight += f.commuters;
      acc.time_plain += *f.mean_time_min;
      ++acc.time_n;
    }
  }
  std::vector<OdFlow> flows;
  for (const auto& [key, acc] : pairs) {
    OdFlow f{key.first, key.second, acc.commuters, std::nullopt};
    if (acc.flow_n == 1) {
      f.mean_time_min = acc.single_time;
    } else if (acc.time_weight > 0) {
      f.mean_time_min = acc.time_weighted / static_cast<double>(acc.time_weight);
    } else if (acc.time_n > 0) {
      f.mean_time_min = acc.time_plain / static_cast<double>(acc.time_n);
    }
    flows.push_back(f);
  }
  ODMatrix parent_od(std::move(flows), parent_set.size());
  return {std::move(parent_set), std::move(parent_od)};
}

}  // namespace commute
