#include "vemeig/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace vemeig {

namespace {

double cross(const Point& a, const Point& b) { return a.x() * b.y() - a.y() * b.x(); }

int orientation(const Point& a, const Point& b, const Point& c) {
  const double v = cross(b - a, c - a);
  const double scale = (b - a).norm() * (c - a).norm();
  if (std::abs(v) <= 1e-14 * scale) return 0;
  return v > 0 ? 1 : -1;
}

bool on_segment(const Point& a, const Point& b, const Point& p) {
  return std::min(a.x(), b.x()) <= p.x() && p.x() <= std::max(a.x(), b.x()) &&
         std::min(a.y(), b.y()) <= p.y() && p.y() <= std::max(a.y(), b.y());
}

bool segments_intersect(const Point& p1, const Point& p2, const Point& q1, const Point& q2) {
  const int o1 = orientation(p1, p2, q1);
  const int o2 = orientation(p1, p2, q2);
  const int o3 = orientation(q1, q2, p1);
  const int o4 = orientation(q1, q2, p2);
  if (o1 != o2 && o3 != o4) return true;
  if (o1 == 0 && on_segment(p1, p2, q1)) return true;
  if (o2 == 0 && on_segment(p1, p2, q2)) return true;
  if (o3 == 0 && on_segment(q1, q2, p1)) return true;
  if (o4 == 0 && on_segment(q1, q2, p2)) return true;
  return false;
}

}  // namespace

double signed_area(std::span<const Point> polygon) {
  const std::size_t n = polygon.size();
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += cross(polygon[i], polygon[(i + 1) % n]);
  return 0.5 * s;
}

Point polygon_centroid(std::span<const Point> polygon) {
  const std::size_t n = polygon.size();
  // Shift to the first vertex to limit cancellation for cells far from the origin.
  const Point o = polygon[0];
  double a = 0.0;
  Point c = Point::Zero();
  for (std::size_t i = 0; i < n; ++i) {
    const Point p = polygon[i] - o;
    const Point q = polygon[(i + 1) % n] - o;
    const double w = cross(p, q);
    a += w;
    c += w * (p + q);
  }
  return o + c / (3.0 * a);
}

double polygon_diameter(std::span<const Point> polygon) {
  double d = 0.0;
  for (std::size_t i = 0; i < polygon.size(); ++i)
    for (std::size_t j = i + 1; j < polygon.size(); ++j) d = std::max(d, (polygon[i] - polygon[j]).norm());
  return d;
}

bool is_convex(std::span<const Point> polygon) {
  const std::size_t n = polygon.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Point& a = polygon[i];
    const Point& b = polygon[(i + 1) % n];
    const Point& c = polygon[(i + 2) % n];
    if (cross(b - a, c - b) < -1e-14 * (b - a).norm() * (c - b).norm()) return false;
  }
  return true;
}

bool is_simple(std::span<const Point> polygon) {
  const std::size_t n = polygon.size();
  if (n < 3) return false;
  for (std::size_t i = 0; i < n; ++i)
    if ((polygon[i] - polygon[(i + 1) % n]).norm() == 0.0) return false;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const bool adjacent = j == i + 1 || (i == 0 && j == n - 1);
      if (adjacent) continue;
      if (segments_intersect(polygon[i], polygon[(i + 1) % n], polygon[j], polygon[(j + 1) % n])) return false;
    }
  }
  return true;
}

Point CellGeometry::global_tangent(int i) const {
  const Point d = (vertex(i + 1) - vertex(i)).normalized();
  return edge_forward[static_cast<std::size_t>(i)] ? d : Point(-d);
}

Point CellGeometry::outward_normal(int i) const {
  const Point d = (vertex(i + 1) - vertex(i)).normalized();
  return {d.y(), -d.x()};
}

double CellGeometry::edge_length(int i) const { return (vertex(i + 1) - vertex(i)).norm(); }

Point CellGeometry::edge_midpoint(int i) const { return 0.5 * (vertex(i + 1) + vertex(i)); }

CellGeometry make_cell(std::vector<Point> vertices, std::vector<bool> edge_forward, int id) {
  CellGeometry cell;
  if (edge_forward.empty()) edge_forward.assign(vertices.size(), true);
  if (edge_forward.size() != vertices.size()) throw MeshError("edge orientation flags do not match the vertex count");
  cell.area = signed_area(vertices);
  cell.centroid = polygon_centroid(vertices);
  cell.diameter = polygon_diameter(vertices);
  cell.vertices = std::move(vertices);
  cell.edge_forward = std::move(edge_forward);
  cell.id = id;
  return cell;
}

}  // namespace vemeig
