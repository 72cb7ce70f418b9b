#include "vemeig/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>

namespace vemeig {

namespace {

constexpr double kMergeTol = 1e-12;

using Polygon = std::vector<Point>;

double cross(const Point& a, const Point& b) { return a.x() * b.y() - a.y() * b.x(); }

Polygon rect_polygon(const Rect& r) { return {{r.x0, r.y0}, {r.x1, r.y0}, {r.x1, r.y1}, {r.x0, r.y1}}; }

void drop_near_duplicates(Polygon& poly) {
  Polygon out;
  out.reserve(poly.size());
  for (const Point& p : poly)
    if (out.empty() || (p - out.back()).norm() > kMergeTol) out.push_back(p);
  while (out.size() > 1 && (out.front() - out.back()).norm() <= kMergeTol) out.pop_back();
  poly = std::move(out);
}

// Keeps {x : (x - mid) . dir <= 0}.
Polygon clip_half_plane(const Polygon& poly, const Point& mid, const Point& dir) {
  Polygon out;
  const std::size_t n = poly.size();
  out.reserve(n + 1);
  for (std::size_t i = 0; i < n; ++i) {
    const Point& p = poly[i];
    const Point& q = poly[(i + 1) % n];
    const double sp = (p - mid).dot(dir);
    const double sq = (q - mid).dot(dir);
    if (sp <= 0) out.push_back(p);
    if ((sp < 0 && sq > 0) || (sp > 0 && sq < 0)) {
      const double t = sp / (sp - sq);
      out.push_back(p + t * (q - p));
    }
  }
  drop_near_duplicates(out);
  if (out.size() < 3) out.clear();
  return out;
}

class SeedGrid {
 public:
  SeedGrid(const std::vector<Point>& seeds, const Rect& box) : seeds_(seeds), box_(box) {
    const double n = static_cast<double>(std::max<std::size_t>(seeds.size(), 1));
    cell_ = std::sqrt(box.area() / n);
    nx_ = std::max(1, static_cast<int>(std::ceil((box.x1 - box.x0) / cell_)));
    ny_ = std::max(1, static_cast<int>(std::ceil((box.y1 - box.y0) / cell_)));
    buckets_.assign(static_cast<std::size_t>(nx_ * ny_), {});
    for (std::size_t i = 0; i < seeds.size(); ++i) {
      auto [bx, by] = bucket(seeds[i]);
      buckets_[static_cast<std::size_t>(by * nx_ + bx)].push_back(static_cast<int>(i));
    }
  }

  std::pair<int, int> bucket(const Point& p) const {
    const int bx = std::clamp(static_cast<int>((p.x() - box_.x0) / cell_), 0, nx_ - 1);
    const int by = std::clamp(static_cast<int>((p.y() - box_.y0) / cell_), 0, ny_ - 1);
    return {bx, by};
  }

  // Seeds in the square ring at Chebyshev distance r (in buckets) from bucket (bx, by).
  template <typename F>
  void for_ring(int bx, int by, int r, F f) const {
    for (int j = by - r; j <= by + r; ++j) {
      if (j < 0 || j >= ny_) continue;
      for (int i = bx - r; i <= bx + r; ++i) {
        if (i < 0 || i >= nx_) continue;
        if (std::max(std::abs(i - bx), std::abs(j - by)) != r) continue;
        for (int s : buckets_[static_cast<std::size_t>(j * nx_ + i)]) f(s);
      }
    }
  }

  int max_ring() const { return std::max(nx_, ny_); }
  double cell_size() const { return cell_; }

 private:
  const std::vector<Point>& seeds_;
  Rect box_;
  double cell_ = 1.0;
  int nx_ = 1, ny_ = 1;
  std::vector<std::vector<int>> buckets_;
};

// Clipped Voronoi cell of seed i as convex pieces, one per domain rectangle.
std::vector<Polygon> voronoi_pieces(int i, const std::vector<Point>& seeds, const SeedGrid& grid,
                                    const std::vector<Rect>& rects) {
  std::vector<Polygon> pieces;
  for (const Rect& r : rects) pieces.push_back(rect_polygon(r));
  const Point s = seeds[static_cast<std::size_t>(i)];
  auto [bx, by] = grid.bucket(s);
  auto radius = [&] {
    double rmax = 0.0;
    for (const auto& piece : pieces)
      for (const Point& p : piece) rmax = std::max(rmax, (p - s).norm());
    return rmax;
  };
  for (int ring = 0; ring <= grid.max_ring(); ++ring) {
    // Unvisited seeds lie at least (ring - 1) bucket widths away.
    if (ring >= 2 && (ring - 1) * grid.cell_size() > 2.0 * radius()) break;
    grid.for_ring(bx, by, ring, [&](int j) {
      if (j == i) return;
      const Point& t = seeds[static_cast<std::size_t>(j)];
      const Point dir = t - s;
      const Point mid = 0.5 * (s + t);
      for (auto& piece : pieces)
        if (!piece.empty()) piece = clip_half_plane(piece, mid, dir);
    });
  }
  std::erase_if(pieces, [](const Polygon& p) { return p.empty(); });
  return pieces;
}

bool on_seam(const Point& p, const Domain& domain) {
  if (domain.kind() != Domain::Kind::LShape) return false;
  // Seams between the three rectangles: y = 0 for x in [-1,0], x = 0 for y in [0,1].
  return (std::abs(p.y()) <= kMergeTol && p.x() <= kMergeTol) || (std::abs(p.x()) <= kMergeTol && p.y() >= -kMergeTol);
}

// Boundary loops of the union of polygons: shared edges traversed in both
// directions cancel, the remaining directed edges are chained into cycles.
std::vector<Polygon> union_loops(const std::vector<Polygon>& polys, const std::string& what) {
  std::vector<Point> verts;
  auto vid = [&](const Point& p) {
    for (std::size_t k = 0; k < verts.size(); ++k)
      if ((verts[k] - p).norm() <= kMergeTol) return static_cast<int>(k);
    verts.push_back(p);
    return static_cast<int>(verts.size() - 1);
  };
  std::map<std::pair<int, int>, int> directed;
  for (const auto& poly : polys)
    for (std::size_t k = 0; k < poly.size(); ++k) {
      const int a = vid(poly[k]);
      const int b = vid(poly[(k + 1) % poly.size()]);
      if (a != b) ++directed[{a, b}];
    }
  std::map<int, int> next;
  for (const auto& [e, n] : directed) {
    if (directed.contains({e.second, e.first})) continue;
    if (n > 1 || next.contains(e.first)) throw MeshError("degenerate clipped cell for " + what);
    next[e.first] = e.second;
  }
  if (next.empty()) throw MeshError("empty clipped cell for " + what);
  std::vector<Polygon> loops;
  while (!next.empty()) {
    Polygon loop;
    const int start = next.begin()->first;
    int cur = start;
    do {
      loop.push_back(verts[static_cast<std::size_t>(cur)]);
      auto it = next.find(cur);
      if (it == next.end()) throw MeshError("open clipped cell boundary for " + what);
      cur = it->second;
      next.erase(it);
    } while (cur != start);
    loops.push_back(std::move(loop));
  }
  return loops;
}

bool inside_polygon(const Polygon& poly, const Point& p) {
  bool in = false;
  for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
    const Point& a = poly[i];
    const Point& b = poly[j];
    if ((a.y() > p.y()) != (b.y() > p.y()) && p.x() < (b.x() - a.x()) * (p.y() - a.y()) / (b.y() - a.y()) + a.x())
      in = !in;
  }
  return in;
}

// Length of boundary shared by two polygons (edges traversed in opposite directions).
double shared_length(const Polygon& p, const Polygon& q) {
  double len = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const Point& a = p[i];
    const Point& b = p[(i + 1) % p.size()];
    for (std::size_t j = 0; j < q.size(); ++j)
      if ((q[j] - b).norm() <= kMergeTol && (q[(j + 1) % q.size()] - a).norm() <= kMergeTol) len += (b - a).norm();
  }
  return len;
}

// On a non-convex domain a clipped Voronoi cell can fall apart into several
// components (around the re-entrant corner). The component holding the seed
// stays with it; every other component is glued to the neighbouring cell it
// shares the longest edge with.
std::vector<Polygon> voronoi_cells(const std::vector<Point>& seeds, const Domain& domain) {
  const auto rects = domain.convex_pieces();
  SeedGrid grid(seeds, domain.bounding_box());
  std::vector<Polygon> cells;
  std::vector<Polygon> orphans;
  cells.reserve(seeds.size());
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    auto pieces = voronoi_pieces(static_cast<int>(i), seeds, grid, rects);
    if (pieces.empty()) throw MeshError("empty clipped cell for seed " + std::to_string(i));
    if (pieces.size() == 1) {
      cells.push_back(std::move(pieces.front()));
      continue;
    }
    auto loops = union_loops(pieces, "seed " + std::to_string(i));
    std::size_t main = 0;
    double best = -1.0;
    for (std::size_t l = 0; l < loops.size(); ++l) {
      const double score = inside_polygon(loops[l], seeds[i]) ? 1e300 : signed_area(loops[l]);
      if (score > best) {
        best = score;
        main = l;
      }
    }
    for (std::size_t l = 0; l < loops.size(); ++l)
      if (l != main) orphans.push_back(std::move(loops[l]));
    cells.push_back(std::move(loops[main]));
  }
  for (const auto& orphan : orphans) {
    std::size_t target = cells.size();
    double best = 0.0;
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const double len = shared_length(orphan, cells[c]);
      if (len > best) {
        best = len;
        target = c;
      }
    }
    if (target == cells.size()) throw MeshError("isolated clipped cell fragment (degenerate seed configuration)");
    auto merged = union_loops({cells[target], orphan}, "seed " + std::to_string(target));
    if (merged.size() != 1)
      throw MeshError("clipped cell fragment of seed " + std::to_string(target) + " does not merge into a simple cell");
    cells[target] = std::move(merged.front());
  }
  return cells;
}

void check_distinct(const std::vector<Point>& seeds) {
  std::vector<int> order(seeds.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const Point& p = seeds[static_cast<std::size_t>(a)];
    const Point& q = seeds[static_cast<std::size_t>(b)];
    return p.x() != q.x() ? p.x() < q.x() : p.y() < q.y();
  });
  for (std::size_t k = 0; k < order.size(); ++k)
    for (std::size_t m = k + 1; m < order.size(); ++m) {
      const Point& p = seeds[static_cast<std::size_t>(order[k])];
      const Point& q = seeds[static_cast<std::size_t>(order[m])];
      if (q.x() - p.x() > kMergeTol) break;
      if ((p - q).norm() <= kMergeTol)
        throw MeshError("degenerate seed configuration: seeds " + std::to_string(order[k]) + " and " +
                        std::to_string(order[m]) + " coincide");
    }
}

// Seam vertices exist only because the domain was cut into rectangles. One is
// removed from every cell using it when it has exactly two neighbours and the
// boundary runs straight through it, so both sides of an edge stay consistent.
void drop_seam_vertices(std::vector<Point>& vertices, std::vector<std::vector<int>>& cells, const Domain& domain) {
  if (domain.kind() != Domain::Kind::LShape) return;
  std::vector<std::vector<int>> nbr(vertices.size());
  for (const auto& cyc : cells)
    for (std::size_t k = 0; k < cyc.size(); ++k) {
      const int a = cyc[k], b = cyc[(k + 1) % cyc.size()];
      nbr[static_cast<std::size_t>(a)].push_back(b);
      nbr[static_cast<std::size_t>(b)].push_back(a);
    }
  std::vector<bool> drop(vertices.size(), false);
  for (std::size_t v = 0; v < vertices.size(); ++v) {
    if (!on_seam(vertices[v], domain)) continue;
    auto& n = nbr[v];
    std::sort(n.begin(), n.end());
    n.erase(std::unique(n.begin(), n.end()), n.end());
    if (n.size() != 2) continue;
    const Point& a = vertices[static_cast<std::size_t>(n[0])];
    const Point& b = vertices[v];
    const Point& c = vertices[static_cast<std::size_t>(n[1])];
    if (std::abs(cross(b - a, c - b)) <= 1e-8 * (b - a).norm() * (c - b).norm() && (b - a).dot(c - b) > 0) drop[v] = true;
  }
  std::vector<int> renum(vertices.size(), -1);
  std::vector<Point> kept;
  for (std::size_t v = 0; v < vertices.size(); ++v)
    if (!drop[v]) {
      renum[v] = static_cast<int>(kept.size());
      kept.push_back(vertices[v]);
    }
  for (auto& cyc : cells) {
    std::vector<int> out;
    for (int v : cyc)
      if (!drop[static_cast<std::size_t>(v)]) out.push_back(renum[static_cast<std::size_t>(v)]);
    cyc = std::move(out);
  }
  vertices = std::move(kept);
}

// Glues per-seed polygons into an indexed mesh, merging vertices within kMergeTol.
PolygonalMesh assemble_cells(const std::vector<Polygon>& polys, const Domain& domain) {
  struct Tagged {
    Point p;
    std::size_t cell, slot;
  };
  std::vector<Tagged> all;
  for (std::size_t c = 0; c < polys.size(); ++c)
    for (std::size_t k = 0; k < polys[c].size(); ++k) all.push_back({polys[c][k], c, k});
  std::vector<std::size_t> order(all.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return all[a].p.x() != all[b].p.x() ? all[a].p.x() < all[b].p.x() : a < b;
  });
  std::vector<std::size_t> rep(all.size());
  std::iota(rep.begin(), rep.end(), 0);
  auto find = [&](std::size_t a) {
    while (rep[a] != a) a = rep[a] = rep[rep[a]];
    return a;
  };
  for (std::size_t k = 0; k < order.size(); ++k)
    for (std::size_t m = k + 1; m < order.size(); ++m) {
      const auto& p = all[order[k]];
      const auto& q = all[order[m]];
      if (q.p.x() - p.p.x() > kMergeTol) break;
      if ((p.p - q.p).norm() <= kMergeTol) {
        const std::size_t ra = find(order[k]);
        const std::size_t rb = find(order[m]);
        if (ra != rb) rep[std::max(ra, rb)] = std::min(ra, rb);
      }
    }
  // Number vertices by first appearance in cell order.
  std::vector<int> id_of_root(all.size(), -1);
  std::vector<Point> vertices;
  std::vector<std::vector<int>> cells(polys.size());
  std::size_t flat = 0;
  for (std::size_t c = 0; c < polys.size(); ++c) {
    for (std::size_t k = 0; k < polys[c].size(); ++k, ++flat) {
      const std::size_t r = find(flat);
      if (id_of_root[r] < 0) {
        id_of_root[r] = static_cast<int>(vertices.size());
        vertices.push_back(all[r].p);
      }
      const int v = id_of_root[r];
      if (cells[c].empty() || cells[c].back() != v) cells[c].push_back(v);
    }
    while (cells[c].size() > 1 && cells[c].front() == cells[c].back()) cells[c].pop_back();
  }
  drop_seam_vertices(vertices, cells, domain);
  for (std::size_t c = 0; c < cells.size(); ++c)
    if (cells[c].size() < 3) throw MeshError("clipped cell " + std::to_string(c) + " collapsed after vertex merging");
  return PolygonalMesh(std::move(vertices), std::move(cells), domain);
}

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

}  // namespace

PolygonalMesh build_voronoi_mesh_from_seeds(const Domain& domain, std::vector<Point> seeds, int lloyd_iterations) {
  if (seeds.empty()) throw ConfigError("voronoi mesh needs at least one seed");
  if (lloyd_iterations < 0) throw ConfigError("lloyd_iterations must be >= 0");
  for (std::size_t i = 0; i < seeds.size(); ++i)
    if (!domain.contains(seeds[i])) throw MeshError("seed " + std::to_string(i) + " lies outside the domain");
  check_distinct(seeds);
  auto cells = voronoi_cells(seeds, domain);
  for (int it = 0; it < lloyd_iterations; ++it) {
    for (std::size_t i = 0; i < seeds.size(); ++i) {
      Point c = polygon_centroid(cells[i]);
      if (!domain.contains(c)) c = domain.project(c);
      seeds[i] = c;
    }
    check_distinct(seeds);
    cells = voronoi_cells(seeds, domain);
  }
  return assemble_cells(cells, domain);
}

PolygonalMesh build_voronoi_mesh(const Domain& domain, const VoronoiOptions& options) {
  if (options.n_seeds < 1) throw ConfigError("voronoi mesh needs n_seeds >= 1");
  std::mt19937_64 rng(options.rng_seed);
  const Rect box = domain.bounding_box();
  std::vector<Point> seeds;
  seeds.reserve(static_cast<std::size_t>(options.n_seeds));
  while (static_cast<int>(seeds.size()) < options.n_seeds) {
    const Point p(box.x0 + (box.x1 - box.x0) * uniform01(rng), box.y0 + (box.y1 - box.y0) * uniform01(rng));
    if (domain.contains(p)) seeds.push_back(p);
  }
  return build_voronoi_mesh_from_seeds(domain, std::move(seeds), options.lloyd_iterations);
}

}  // namespace vemeig
