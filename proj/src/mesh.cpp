#include "vemeig/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

namespace vemeig {

Domain Domain::parse(std::string_view name) {
  if (name == "square") return square();
  if (name == "lshape" || name == "L-shape" || name == "l-shape") return lshape();
  throw ConfigError("unsupported domain '" + std::string(name) + "' (expected square|lshape)");
}

std::string Domain::name() const { return kind_ == Kind::Square ? "square" : "lshape"; }

double Domain::area() const {
  return kind_ == Kind::Square ? std::numbers::pi * std::numbers::pi : 3.0;
}

Rect Domain::bounding_box() const {
  if (kind_ == Kind::Square) return {0.0, 0.0, std::numbers::pi, std::numbers::pi};
  return {-1.0, -1.0, 1.0, 1.0};
}

std::vector<Rect> Domain::convex_pieces() const {
  if (kind_ == Kind::Square) return {bounding_box()};
  return {{-1.0, -1.0, 0.0, 0.0}, {-1.0, 0.0, 0.0, 1.0}, {0.0, 0.0, 1.0, 1.0}};
}

bool Domain::contains(const Point& p) const {
  for (const Rect& r : convex_pieces())
    if (r.contains(p)) return true;
  return false;
}

Point Domain::project(const Point& p) const {
  Point best = p;
  double best_d = std::numeric_limits<double>::infinity();
  for (const Rect& r : convex_pieces()) {
    const Point q(std::clamp(p.x(), r.x0, r.x1), std::clamp(p.y(), r.y0, r.y1));
    const double d = (q - p).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = q;
    }
  }
  return best;
}

std::vector<Point> Domain::boundary() const {
  if (kind_ == Kind::Square) {
    const double L = std::numbers::pi;
    return {{0, 0}, {L, 0}, {L, L}, {0, L}};
  }
  return {{-1, -1}, {0, -1}, {0, 0}, {1, 0}, {1, 1}, {-1, 1}};
}

PolygonalMesh::PolygonalMesh(std::vector<Point> vertices, std::vector<std::vector<int>> cells,
                             std::optional<Domain> domain)
    : vertices_(std::move(vertices)), cells_(std::move(cells)), domain_(domain) {
  const int nv = num_vertices();
  std::map<std::pair<int, int>, int> edge_ids;
  // First pass: collect unique edges in lexicographic order of (v0, v1).
  for (std::size_t c = 0; c < cells_.size(); ++c) {
    const auto& cyc = cells_[c];
    if (cyc.size() < 3) throw MeshError("cell " + std::to_string(c) + " has fewer than 3 vertices");
    for (std::size_t i = 0; i < cyc.size(); ++i) {
      const int a = cyc[i];
      const int b = cyc[(i + 1) % cyc.size()];
      if (a < 0 || a >= nv || b < 0 || b >= nv)
        throw MeshError("cell " + std::to_string(c) + " references missing vertex");
      if (a == b) throw MeshError("cell " + std::to_string(c) + " repeats vertex " + std::to_string(a));
      edge_ids.emplace(std::minmax(a, b), -1);
    }
  }
  edges_.reserve(edge_ids.size());
  for (auto& [key, id] : edge_ids) {
    id = static_cast<int>(edges_.size());
    MeshEdge e;
    e.v0 = key.first;
    e.v1 = key.second;
    edges_.push_back(e);
  }
  cell_edges_.resize(cells_.size());
  areas_.resize(cells_.size());
  centroids_.resize(cells_.size());
  diameters_.resize(cells_.size());
  for (std::size_t c = 0; c < cells_.size(); ++c) {
    const auto& cyc = cells_[c];
    auto& ce = cell_edges_[c];
    ce.resize(cyc.size());
    std::vector<Point> poly;
    poly.reserve(cyc.size());
    for (std::size_t i = 0; i < cyc.size(); ++i) {
      const int a = cyc[i];
      const int b = cyc[(i + 1) % cyc.size()];
      const int id = edge_ids.at(std::minmax(a, b));
      ce[i] = id;
      MeshEdge& e = edges_[static_cast<std::size_t>(id)];
      if (e.num_cells < 2) e.cells[static_cast<std::size_t>(e.num_cells)] = static_cast<int>(c);
      ++e.num_cells;
      poly.push_back(vertices_[static_cast<std::size_t>(a)]);
    }
    areas_[c] = signed_area(poly);
    centroids_[c] = polygon_centroid(poly);
    diameters_[c] = polygon_diameter(poly);
    h_ = std::max(h_, diameters_[c]);
  }
}

double PolygonalMesh::total_area() const {
  double s = 0.0;
  for (double a : areas_) s += a;
  return s;
}

std::vector<bool> PolygonalMesh::boundary_vertex_flags() const {
  std::vector<bool> flags(vertices_.size(), false);
  for (const MeshEdge& e : edges_) {
    if (!e.boundary()) continue;
    flags[static_cast<std::size_t>(e.v0)] = true;
    flags[static_cast<std::size_t>(e.v1)] = true;
  }
  return flags;
}

CellGeometry PolygonalMesh::cell_geometry(int c) const {
  const auto& cyc = cell(c);
  std::vector<Point> pts;
  std::vector<bool> fwd;
  pts.reserve(cyc.size());
  fwd.reserve(cyc.size());
  for (std::size_t i = 0; i < cyc.size(); ++i) {
    pts.push_back(vertices_[static_cast<std::size_t>(cyc[i])]);
    fwd.push_back(cyc[i] < cyc[(i + 1) % cyc.size()]);
  }
  CellGeometry g;
  g.vertices = std::move(pts);
  g.edge_forward = std::move(fwd);
  g.area = cell_area(c);
  g.centroid = cell_centroid(c);
  g.diameter = cell_diameter(c);
  g.id = c;
  return g;
}

namespace {

// Grid of (cells_x x cells_y) squares over a rectangle; `keep` selects cells.
template <typename Keep, typename Emit>
void structured_grid(const Rect& box, int nx, int ny, Keep keep, Emit emit, std::vector<Point>& vertices) {
  std::map<std::pair<int, int>, int> ids;
  auto vid = [&](int i, int j) {
    auto [it, inserted] = ids.emplace(std::make_pair(j, i), static_cast<int>(vertices.size()));
    if (inserted) {
      const double x = box.x0 + (box.x1 - box.x0) * static_cast<double>(i) / nx;
      const double y = box.y0 + (box.y1 - box.y0) * static_cast<double>(j) / ny;
      vertices.emplace_back(x, y);
    }
    return it->second;
  };
  // Pre-register used vertices row by row so numbering is lexicographic in (y, x).
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i) {
      bool used = false;
      for (int dj = -1; dj <= 0 && !used; ++dj)
        for (int di = -1; di <= 0 && !used; ++di) {
          const int ci = i + di, cj = j + dj;
          if (ci >= 0 && cj >= 0 && ci < nx && cj < ny && keep(ci, cj)) used = true;
        }
      if (used) vid(i, j);
    }
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i)
      if (keep(i, j)) emit(vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1));
}

template <typename Emit>
std::vector<Point> domain_grid(const Domain& domain, int n, Emit emit) {
  if (n < 1) throw ConfigError("cartesian mesh needs n >= 1");
  std::vector<Point> vertices;
  if (domain.kind() == Domain::Kind::Square) {
    structured_grid(domain.bounding_box(), n, n, [](int, int) { return true; }, emit, vertices);
  } else {
    const int m = 2 * n;
    // Drop the quadrant (0,1)x(-1,0): cells with i >= n and j < n.
    structured_grid(domain.bounding_box(), m, m, [n](int i, int j) { return !(i >= n && j < n); }, emit, vertices);
  }
  return vertices;
}

}  // namespace

PolygonalMesh build_cartesian_mesh(const Domain& domain, int n) {
  std::vector<std::vector<int>> cells;
  auto vertices = domain_grid(domain, n, [&](int a, int b, int c, int d) { cells.push_back({a, b, c, d}); });
  return PolygonalMesh(std::move(vertices), std::move(cells), domain);
}

PolygonalMesh build_triangle_mesh(const Domain& domain, int n) {
  std::vector<std::vector<int>> cells;
  auto vertices = domain_grid(domain, n, [&](int a, int b, int c, int d) {
    cells.push_back({a, b, c});
    cells.push_back({a, c, d});
  });
  return PolygonalMesh(std::move(vertices), std::move(cells), domain);
}

namespace {

double distance_to_segment(const Point& p, const Point& a, const Point& b) {
  const Point d = b - a;
  const double t = std::clamp((p - a).dot(d) / d.squaredNorm(), 0.0, 1.0);
  return (a + t * d - p).norm();
}

bool on_polygon_boundary(const Point& p, const std::vector<Point>& poly, double tol) {
  for (std::size_t i = 0; i < poly.size(); ++i)
    if (distance_to_segment(p, poly[i], poly[(i + 1) % poly.size()]) <= tol) return true;
  return false;
}

}  // namespace

MeshQualityReport validate_mesh(const PolygonalMesh& mesh) {
  MeshQualityReport r;
  r.min_edge_to_diameter_ratio = mesh.num_cells() > 0 ? 1.0 : 0.0;
  r.h = mesh.h();
  const auto& V = mesh.vertices();
  std::map<std::pair<int, int>, int> directed;
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const auto& cyc = mesh.cell(c);
    std::vector<Point> poly;
    for (int v : cyc) poly.push_back(V[static_cast<std::size_t>(v)]);
    r.max_vertices_per_cell = std::max(r.max_vertices_per_cell, static_cast<int>(cyc.size()));
    if (!(signed_area(poly) > 0.0)) ++r.orientation_failures;
    if (!is_convex(poly)) ++r.nonconvex_cells;
    if (!is_simple(poly)) ++r.non_simple_cells;
    const double hp = mesh.cell_diameter(c);
    for (std::size_t i = 0; i < cyc.size(); ++i) {
      const double he = (poly[(i + 1) % poly.size()] - poly[i]).norm();
      if (hp > 0) r.min_edge_to_diameter_ratio = std::min(r.min_edge_to_diameter_ratio, he / hp);
      ++directed[{cyc[i], cyc[(i + 1) % cyc.size()]}];
    }
    r.area_sum += mesh.cell_area(c);
  }
  for (const auto& [key, count] : directed)
    if (count > 1) ++r.manifold_failures;
  const auto boundary = mesh.domain() ? mesh.domain()->boundary() : std::vector<Point>{};
  for (const MeshEdge& e : mesh.edges()) {
    if (e.num_cells > 2) ++r.manifold_failures;
    if (e.boundary() && !boundary.empty()) {
      const Point mid = 0.5 * (V[static_cast<std::size_t>(e.v0)] + V[static_cast<std::size_t>(e.v1)]);
      if (!on_polygon_boundary(mid, boundary, 1e-10)) ++r.open_boundary_edges;
    }
  }
  if (mesh.domain()) {
    const double a = mesh.domain()->area();
    r.area_relative_error = std::abs(r.area_sum - a) / a;
  } else {
    r.area_relative_error = std::numeric_limits<double>::quiet_NaN();
  }
  return r;
}

}  // namespace vemeig
