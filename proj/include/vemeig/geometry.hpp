#pragma once

#include <Eigen/Dense>

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace vemeig {

using Point = Eigen::Vector2d;

/// Invalid user input: bad flags, malformed config, inconsistent study setup.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Geometric or topological defect in a mesh or a polygon.
class MeshError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Failure of a numerical kernel (singular local system, failed factorization, ...).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

double signed_area(std::span<const Point> polygon);
Point polygon_centroid(std::span<const Point> polygon);
/// Maximum pairwise vertex distance.
double polygon_diameter(std::span<const Point> polygon);
bool is_convex(std::span<const Point> polygon);
/// True when no two non-adjacent edges intersect and no edge is degenerate.
bool is_simple(std::span<const Point> polygon);

/// Geometry of one cell as seen by the local element code.
///
/// `edge_forward[i]` tells whether the local edge V_i -> V_{i+1} runs along the
/// global edge orientation (lower vertex index to higher). Edge-moment degrees
/// of freedom are always taken in the global orientation so that the two cells
/// sharing an edge agree on them.
struct CellGeometry {
  std::vector<Point> vertices;
  std::vector<bool> edge_forward;
  double area = 0.0;
  Point centroid = Point::Zero();
  double diameter = 0.0;
  int id = -1;

  int num_vertices() const { return static_cast<int>(vertices.size()); }
  const Point& vertex(int i) const { return vertices[static_cast<std::size_t>(i % num_vertices())]; }
  /// Unit tangent of local edge i in the global orientation.
  Point global_tangent(int i) const;
  /// Outward unit normal of local edge i (cell is counterclockwise).
  Point outward_normal(int i) const;
  double edge_length(int i) const;
  Point edge_midpoint(int i) const;
};

/// Builds a CellGeometry from a counterclockwise vertex cycle. With an empty
/// `edge_forward` every local edge is taken to be globally forward.
CellGeometry make_cell(std::vector<Point> vertices, std::vector<bool> edge_forward = {}, int id = -1);

}  // namespace vemeig
