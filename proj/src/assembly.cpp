#include "vemeig/assembly.hpp"

#include "vemeig/io.hpp"

#include <cstdint>
#include <cstdio>
#include <sstream>

namespace vemeig {

BoundaryCondition parse_boundary_condition(std::string_view name) {
  if (name == "dirichlet") return BoundaryCondition::Dirichlet;
  if (name == "neumann") return BoundaryCondition::Neumann;
  throw ConfigError("unknown boundary condition '" + std::string(name) + "' (expected dirichlet|neumann)");
}

std::string to_string(BoundaryCondition bc) { return bc == BoundaryCondition::Dirichlet ? "dirichlet" : "neumann"; }

ParameterMode parse_parameter_mode(std::string_view name) {
  if (name == "recipe") return ParameterMode::Recipe;
  if (name == "raw") return ParameterMode::Raw;
  throw ConfigError("unknown parameter mode '" + std::string(name) + "' (expected recipe|raw)");
}

std::string to_string(ParameterMode m) { return m == ParameterMode::Recipe ? "recipe" : "raw"; }

std::vector<int> DofMap::cell_dofs(const PolygonalMesh& mesh, int c) const {
  const auto& verts = mesh.cell(c);
  const int nv = static_cast<int>(verts.size());
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(nv * (vertex_dofs + dofs_per_edge) + dofs_per_cell));
  if (vertex_dofs)
    for (int v : verts) out.push_back(vertex_dof(v));
  for (int i = 0; i < nv; ++i)
    for (int j = 0; j < dofs_per_edge; ++j) out.push_back(edge_dof(mesh.cell_edge(c, i), j));
  for (int a = 0; a < dofs_per_cell; ++a) out.push_back(cell_dof(c, a));
  return out;
}

Eigen::VectorXd DofMap::expand(const Eigen::VectorXd& free) const {
  if (free.size() != num_free) throw ConfigError("free vector has wrong length");
  Eigen::VectorXd out = Eigen::VectorXd::Zero(num_total);
  for (int i = 0; i < num_free; ++i) out(total_index[static_cast<std::size_t>(i)]) = free(i);
  return out;
}

Eigen::VectorXd DofMap::restrict_free(const Eigen::VectorXd& total) const {
  if (total.size() != num_total) throw ConfigError("total vector has wrong length");
  Eigen::VectorXd out(num_free);
  for (int i = 0; i < num_free; ++i) out(i) = total(total_index[static_cast<std::size_t>(i)]);
  return out;
}

DofMap build_dof_map(const PolygonalMesh& mesh, SpaceKind space, int k, BoundaryCondition bc) {
  if (k < 1) throw ConfigError("polynomial degree k must be >= 1");
  DofMap m;
  m.space = space;
  m.k = k;
  m.bc = bc;
  m.num_vertices = mesh.num_vertices();
  m.num_edges = mesh.num_edges();
  m.num_cells = mesh.num_cells();
  m.vertex_dofs = space == SpaceKind::Conforming ? 1 : 0;
  m.dofs_per_edge = space == SpaceKind::Conforming ? k - 1 : k;
  m.dofs_per_cell = k >= 2 ? ScaledMonomials::dim(k - 2) : 0;
  m.num_total = m.num_vertices * m.vertex_dofs + m.num_edges * m.dofs_per_edge + m.num_cells * m.dofs_per_cell;

  std::vector<bool> fixed(static_cast<std::size_t>(m.num_total), false);
  if (bc == BoundaryCondition::Dirichlet) {
    if (m.vertex_dofs) {
      const auto flags = mesh.boundary_vertex_flags();
      for (int v = 0; v < m.num_vertices; ++v)
        if (flags[static_cast<std::size_t>(v)]) fixed[static_cast<std::size_t>(m.vertex_dof(v))] = true;
    }
    for (int e = 0; e < m.num_edges; ++e)
      if (mesh.edges()[static_cast<std::size_t>(e)].boundary())
        for (int j = 0; j < m.dofs_per_edge; ++j) fixed[static_cast<std::size_t>(m.edge_dof(e, j))] = true;
  }
  m.free_index.assign(static_cast<std::size_t>(m.num_total), -1);
  for (int i = 0; i < m.num_total; ++i) {
    if (fixed[static_cast<std::size_t>(i)]) continue;
    m.free_index[static_cast<std::size_t>(i)] = m.num_free++;
    m.total_index.push_back(i);
  }
  return m;
}

std::string mesh_id(const PolygonalMesh& mesh) {
  // FNV-1a over the raw coordinates and connectivity
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= p[i];
      h *= 1099511628211ULL;
    }
  };
  for (const Point& v : mesh.vertices()) mix(v.data(), 2 * sizeof(double));
  for (const auto& c : mesh.cells()) {
    const int n = static_cast<int>(c.size());
    mix(&n, sizeof n);
    mix(c.data(), c.size() * sizeof(int));
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

namespace {

using Triplets = std::vector<Eigen::Triplet<double>>;

void scatter(Triplets& t, const std::vector<int>& free, const Eigen::MatrixXd& K, double scale) {
  const int n = static_cast<int>(free.size());
  for (int j = 0; j < n; ++j) {
    const int gj = free[static_cast<std::size_t>(j)];
    if (gj < 0) continue;
    for (int i = 0; i < n; ++i) {
      const int gi = free[static_cast<std::size_t>(i)];
      if (gi < 0) continue;
      const double v = scale * K(i, j);
      if (v != 0.0) t.emplace_back(gi, gj, v);
    }
  }
}

SparseMatrix finalize(const Triplets& t, int n) {
  SparseMatrix S(n, n);
  S.setFromTriplets(t.begin(), t.end());
  S.makeCompressed();
  return S;
}

std::vector<int> free_cell_dofs(const PolygonalMesh& mesh, const DofMap& dofs, int c) {
  std::vector<int> g = dofs.cell_dofs(mesh, c);
  for (int& i : g) i = dofs.free_index[static_cast<std::size_t>(i)];
  return g;
}

}  // namespace

AssembledPencil assemble_pencil(const PolygonalMesh& mesh, const DofMap& dofs, const AssemblyOptions& options) {
  AssembledPencil P;
  P.info.k = dofs.k;
  P.info.space = dofs.space;
  P.info.bc = dofs.bc;
  P.info.options = options;
  P.info.mesh_id = mesh_id(mesh);
  P.info.num_cells = mesh.num_cells();
  Triplets a1, a2, m1, m2;
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const LocalElement el(mesh.cell_geometry(c), dofs.space, dofs.k);
    const LocalMatrices L = el.matrices(options.stab_a, options.stab_b);
    const bool recipe = options.mode == ParameterMode::Recipe;
    const auto g = free_cell_dofs(mesh, dofs, c);
    scatter(a1, g, L.Kc, 1.0);
    scatter(a2, g, L.Ks, recipe ? L.recipe_alpha : 1.0);
    scatter(m1, g, L.Mc, 1.0);
    scatter(m2, g, L.Ms, recipe ? L.recipe_beta : 1.0);
    P.alpha_P.push_back(L.alpha_P);
    P.beta_P.push_back(L.beta_P);
  }
  P.A1 = finalize(a1, dofs.num_free);
  P.A2 = finalize(a2, dofs.num_free);
  P.M1 = finalize(m1, dofs.num_free);
  P.M2 = finalize(m2, dofs.num_free);
  return P;
}

Eigen::VectorXd assemble_load(const PolygonalMesh& mesh, const DofMap& dofs, const ScalarFunction& f) {
  Eigen::VectorXd b = Eigen::VectorXd::Zero(dofs.num_free);
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const LocalElement el(mesh.cell_geometry(c), dofs.space, dofs.k);
    const Eigen::VectorXd l = el.load(f);
    const auto g = free_cell_dofs(mesh, dofs, c);
    for (std::size_t i = 0; i < g.size(); ++i)
      if (g[i] >= 0) b(g[i]) += l(static_cast<Eigen::Index>(i));
  }
  return b;
}

Eigen::VectorXd interpolate(const PolygonalMesh& mesh, const DofMap& dofs, const ScalarFunction& f) {
  Eigen::VectorXd u = Eigen::VectorXd::Zero(dofs.num_total);
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const LocalElement el(mesh.cell_geometry(c), dofs.space, dofs.k);
    const Eigen::VectorXd l = el.interpolate(f);
    const auto g = dofs.cell_dofs(mesh, c);
    for (std::size_t i = 0; i < g.size(); ++i) u(g[i]) = l(static_cast<Eigen::Index>(i));
  }
  return u;
}

void write_matrix_market(const SparseMatrix& S, const std::filesystem::path& path) {
  std::ostringstream out;
  long long nnz = 0;
  for (int j = 0; j < S.outerSize(); ++j)
    for (SparseMatrix::InnerIterator it(S, j); it; ++it)
      if (it.row() >= it.col()) ++nnz;
  out << "%%MatrixMarket matrix coordinate real symmetric\n";
  out << S.rows() << ' ' << S.cols() << ' ' << nnz << '\n';
  for (int j = 0; j < S.outerSize(); ++j)
    for (SparseMatrix::InnerIterator it(S, j); it; ++it)
      if (it.row() >= it.col()) out << it.row() + 1 << ' ' << it.col() + 1 << ' ' << format_double(it.value()) << '\n';
  write_file_atomic(path, out.str());
}

}  // namespace vemeig
