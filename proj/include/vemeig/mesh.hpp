#pragma once

#include "vemeig/geometry.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace vemeig {

struct Rect {
  double x0, y0, x1, y1;
  double area() const { return (x1 - x0) * (y1 - y0); }
  bool contains(const Point& p) const { return p.x() >= x0 && p.x() <= x1 && p.y() >= y0 && p.y() <= y1; }
};

/// Benchmark domains: the square (0,pi)^2 and the L-shape (-1,1)^2 \ (0,1)x(-1,0).
class Domain {
 public:
  enum class Kind { Square, LShape };

  static Domain square() { return Domain(Kind::Square); }
  static Domain lshape() { return Domain(Kind::LShape); }
  /// Accepts "square" or "lshape"; throws ConfigError otherwise.
  static Domain parse(std::string_view name);

  Kind kind() const { return kind_; }
  std::string name() const;
  double area() const;
  Rect bounding_box() const;
  /// Convex rectangles whose union is the domain. Adjacent pieces share a full side.
  std::vector<Rect> convex_pieces() const;
  bool contains(const Point& p) const;
  /// Closest point of the closed domain.
  Point project(const Point& p) const;
  /// Counterclockwise boundary polygon.
  std::vector<Point> boundary() const;

  bool operator==(const Domain&) const = default;

 private:
  explicit Domain(Kind k) : kind_(k) {}
  Kind kind_;
};

struct MeshEdge {
  int v0 = -1;  // lower vertex index
  int v1 = -1;  // higher vertex index
  std::array<int, 2> cells{-1, -1};
  int num_cells = 0;
  bool boundary() const { return num_cells == 1; }
};

/// Polygonal mesh with derived edge connectivity and per-cell geometry.
///
/// Immutable after construction. Edges are unique vertex pairs oriented from
/// the lower to the higher vertex index and numbered in lexicographic order of
/// that pair, so re-deriving them always yields the same numbering.
class PolygonalMesh {
 public:
  PolygonalMesh() = default;
  /// Throws MeshError when a cell has fewer than 3 vertices or references a
  /// missing vertex. Orientation and manifoldness are checked by validate_mesh.
  PolygonalMesh(std::vector<Point> vertices, std::vector<std::vector<int>> cells,
                std::optional<Domain> domain = std::nullopt);

  int num_vertices() const { return static_cast<int>(vertices_.size()); }
  int num_cells() const { return static_cast<int>(cells_.size()); }
  int num_edges() const { return static_cast<int>(edges_.size()); }

  const std::vector<Point>& vertices() const { return vertices_; }
  const std::vector<std::vector<int>>& cells() const { return cells_; }
  const std::vector<MeshEdge>& edges() const { return edges_; }
  const std::vector<int>& cell(int c) const { return cells_[static_cast<std::size_t>(c)]; }
  /// Global edge index of local edge i (V_i -> V_{i+1}) of cell c.
  int cell_edge(int c, int i) const { return cell_edges_[static_cast<std::size_t>(c)][static_cast<std::size_t>(i)]; }
  const std::vector<int>& cell_edges(int c) const { return cell_edges_[static_cast<std::size_t>(c)]; }

  double cell_area(int c) const { return areas_[static_cast<std::size_t>(c)]; }
  const Point& cell_centroid(int c) const { return centroids_[static_cast<std::size_t>(c)]; }
  double cell_diameter(int c) const { return diameters_[static_cast<std::size_t>(c)]; }
  /// Mesh size h = max_P h_P.
  double h() const { return h_; }
  double total_area() const;
  std::vector<bool> boundary_vertex_flags() const;

  CellGeometry cell_geometry(int c) const;
  const std::optional<Domain>& domain() const { return domain_; }

 private:
  std::vector<Point> vertices_;
  std::vector<std::vector<int>> cells_;
  std::vector<MeshEdge> edges_;
  std::vector<std::vector<int>> cell_edges_;
  std::vector<double> areas_;
  std::vector<Point> centroids_;
  std::vector<double> diameters_;
  double h_ = 0.0;
  std::optional<Domain> domain_;
};

struct MeshQualityReport {
  double min_edge_to_diameter_ratio = 0.0;
  int max_vertices_per_cell = 0;
  int nonconvex_cells = 0;
  int orientation_failures = 0;
  int non_simple_cells = 0;
  /// Edges used by more than two cells or traversed twice in the same direction.
  int manifold_failures = 0;
  /// Boundary edges not lying on the domain boundary (only checked when the domain is known).
  int open_boundary_edges = 0;
  double area_sum = 0.0;
  /// |sum of areas - |Omega|| / |Omega|, or NaN when the domain is unknown.
  double area_relative_error = 0.0;
  double h = 0.0;

  bool ok() const {
    return orientation_failures == 0 && manifold_failures == 0 && non_simple_cells == 0 && open_boundary_edges == 0 &&
           !(area_relative_error > 1e-10);
  }
};

/// Axis-aligned square cells. For the square, n is the number of cells per side
/// of (0,pi)^2; for the L-shape, n is the number of cells per unit length.
PolygonalMesh build_cartesian_mesh(const Domain& domain, int n);

/// Same grid as build_cartesian_mesh with every square split along its
/// diagonal into two triangles.
PolygonalMesh build_triangle_mesh(const Domain& domain, int n);

struct VoronoiOptions {
  int n_seeds = 50;
  std::uint64_t rng_seed = 1;
  int lloyd_iterations = 20;
};

/// Clipped Voronoi diagram of uniformly sampled seeds after Lloyd relaxation.
/// Deterministic for a fixed rng_seed. Throws MeshError on a degenerate seed
/// configuration (duplicate seeds, empty or disconnected clipped cells).
PolygonalMesh build_voronoi_mesh(const Domain& domain, const VoronoiOptions& options);
/// Same construction from explicit seed positions (all inside the domain).
PolygonalMesh build_voronoi_mesh_from_seeds(const Domain& domain, std::vector<Point> seeds, int lloyd_iterations);

MeshQualityReport validate_mesh(const PolygonalMesh& mesh);

/// JSON with "vertices" ([x,y] pairs), "cells" (index arrays) and an optional
/// "domain" tag. Floats are written with 17 significant digits.
void save_mesh(const PolygonalMesh& mesh, const std::filesystem::path& path);
std::string mesh_to_json(const PolygonalMesh& mesh);
PolygonalMesh load_mesh(const std::filesystem::path& path);
PolygonalMesh mesh_from_json(std::string_view text);

}  // namespace vemeig
