#pragma once

#include <optional>
#include <span>
#include <vector>

namespace commute {

struct Point
{
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point&, const Point&) = default;
};

struct BBox
{
  double min_x = 0.0;
  double min_y = 0.0;
  double max_x = 0.0;
  double max_y = 0.0;

  double width() const { return max_x - min_x; }
  double height() const { return max_y - min_y; }
  Point center() const { return {0.5 * (min_x + max_x), 0.5 * (min_y + max_y)}; }
  bool contains(const Point& p) const
  {
    return p.x >= min_x && p.x <= max_x && p.y >= min_y && p.y <= max_y;
  }

  friend bool operator==(const BBox&, const BBox&) = default;
};

/// Closed ring: first vertex repeated as last.
using Ring = std::vector<Point>;
/// Outer ring followed by holes.
using Polygon = std::vector<Ring>;
using MultiPolygon = std::vector<Polygon>;

double euclidean(const Point& a, const Point& b);

bool ring_is_closed(const Ring& ring);

/// True when two non-adjacent edges of the ring cross or touch.
bool ring_self_intersects(const Ring& ring);

/// Signed shoelace area (counter-clockwise positive).
double ring_signed_area(const Ring& ring);

/// Even-odd rule over every ring of every polygon, so holes are excluded.
bool contains(const MultiPolygon& shape, const Point& p);

BBox bounding_box(const MultiPolygon& shape);

/// Net enclosed area; holes subtract regardless of their winding.
double area(const MultiPolygon& shape);

/// Area-weighted centroid. For degenerate (zero-area) shapes falls back to
/// the vertex average. Empty shapes yield nullopt.
std::optional<Point> centroid(const MultiPolygon& shape);

}  // namespace commute
