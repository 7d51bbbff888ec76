#include "commute/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace commute {

namespace {

double cross(const Point& o, const Point& a, const Point& b)
{
  return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

bool on_segment(const Point& p, const Point& a, const Point& b)
{
  return std::min(a.x, b.x) <= p.x && p.x <= std::max(a.x, b.x) && std::min(a.y, b.y) <= p.y &&
         p.y <= std::max(a.y, b.y);
}

int orientation(const Point& o, const Point& a, const Point& b)
{
  const double c = cross(o, a, b);
  if (c > 0.0) return 1;
  if (c < 0.0) return -1;
  return 0;
}

bool segments_intersect(const Point& p1, const Point& p2, const Point& q1, const Point& q2)
{
  const int o1 = orientation(p1, p2, q1);
  const int o2 = orientation(p1, p2, q2);
  const int o3 = orientation(q1, q2, p1);
  const int o4 = orientation(q1, q2, p2);

  if (o1 != o2 && o3 != o4) return true;
  if (o1 == 0 && on_segment(q1, p1, p2)) return true;
  if (o2 == 0 && on_segment(q2, p1, p2)) return true;
  if (o3 == 0 && on_segment(p1, q1, q2)) return true;
  if (o4 == 0 && on_segment(p2, q1, q2)) return true;
  return false;
}

}  // namespace

double euclidean(const Point& a, const Point& b)
{
  return std::hypot(a.x - b.x, a.y - b.y);
}

bool ring_is_closed(const Ring& ring)
{
  return ring.size() >= 4 && ring.front() == ring.back();
}

bool ring_self_intersects(const Ring& ring)
{
  const std::size_t edges = ring.size() < 2 ? 0 : ring.size() - 1;
  for (std::size_t i = 0; i < edges; ++i) {
    for (std::size_t j = i + 1; j < edges; ++j) {
      // consecutive edges share a vertex, as do the first and last
      if (j == i + 1) continue;
      if (i == 0 && j == edges - 1) continue;
      if (segments_intersect(ring[i], ring[i + 1], ring[j], ring[j + 1])) return true;
    }
  }
  return false;
}

double ring_signed_area(const Ring& ring)
{
  double twice = 0.0;
  for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
    twice += ring[i].x * ring[i + 1].y - ring[i + 1].x * ring[i].y;
  }
  return 0.5 * twice;
}

bool contains(const MultiPolygon& shape, const Point& p)
{
  bool inside = false;
  for (const auto& polygon : shape) {
    for (const auto& ring : polygon) {
      for (std::size_t i = 0, n = ring.size(); i + 1 < n; ++i) {
        const Point& a = ring[i];
        const Point& b = ring[i + 1];
        if ((a.y > p.y) != (b.y > p.y)) {
          const double x_cross = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
          if (p.x < x_cross) inside = !inside;
        }
      }
    }
  }
  return inside;
}

BBox bounding_box(const MultiPolygon& shape)
{
  BBox box{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
           -std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (const auto& polygon : shape) {
    for (const auto& ring : polygon) {
      for (const auto& p : ring) {
        box.min_x = std::min(box.min_x, p.x);
        box.min_y = std::min(box.min_y, p.y);
        box.max_x = std::max(box.max_x, p.x);
        box.max_y = std::max(box.max_y, p.y);
      }
    }
  }
  return box;
}

double area(const MultiPolygon& shape)
{
  double total = 0.0;
  for (const auto& polygon : shape) {
    for (std::size_t r = 0; r < polygon.size(); ++r) {
      const double a = std::abs(ring_signed_area(polygon[r]));
      total += r == 0 ? a : -a;
    }
  }
  return total;
}

std::optional<Point> centroid(const MultiPolygon& shape)
{
  double area_sum = 0.0;
  double cx = 0.0;
  double cy = 0.0;
  double vx = 0.0;
  double vy = 0.0;
  std::size_t vertices = 0;

  for (const auto& polygon : shape) {
    for (std::size_t r = 0; r < polygon.size(); ++r) {
      const Ring& ring = polygon[r];
      const double signed_area = ring_signed_area(ring);
      // outer rings count positive, holes negative, whatever the winding
      const double sign = (r == 0) == (signed_area >= 0.0) ? 1.0 : -1.0;
      double rx = 0.0;
      double ry = 0.0;
      for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
        const double f = ring[i].x * ring[i + 1].y - ring[i + 1].x * ring[i].y;
        rx += (ring[i].x + ring[i + 1].x) * f;
        ry += (ring[i].y + ring[i + 1].y) * f;
        vx += ring[i].x;
        vy += ring[i].y;
        ++vertices;
      }
      area_sum += sign * signed_area;
      cx += sign * rx / 6.0;
      cy += sign * ry / 6.0;
    }
  }

  if (vertices == 0) return std::nullopt;
  if (std::abs(area_sum) <= std::numeric_limits<double>::epsilon()) {
    return Point{vx / static_cast<double>(vertices), vy / static_cast<double>(vertices)};
  }
  return Point{cx / area_sum, cy / area_sum};
}

}  // namespace commute
