#pragma once

#include "vemeig/element.hpp"
#include "vemeig/gevp.hpp"
#include "vemeig/mesh.hpp"

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace vemeig {

enum class BoundaryCondition { Dirichlet, Neumann };
BoundaryCondition parse_boundary_condition(std::string_view name);  // "dirichlet" | "neumann"
std::string to_string(BoundaryCondition bc);

/// Global numbering: vertex values (conforming only) in vertex order, then edge
/// moments edge by edge in global edge order, then interior moments cell by cell.
/// Free DOFs keep that order after Dirichlet elimination.
struct DofMap {
  SpaceKind space = SpaceKind::Conforming;
  int k = 1;
  BoundaryCondition bc = BoundaryCondition::Dirichlet;
  int num_vertices = 0, num_edges = 0, num_cells = 0;
  int vertex_dofs = 0;  // 1 for conforming, 0 otherwise
  int dofs_per_edge = 0;
  int dofs_per_cell = 0;
  int num_total = 0;
  int num_free = 0;
  std::vector<int> free_index;  // total -> free index, -1 when eliminated
  std::vector<int> total_index;  // free -> total

  int vertex_dof(int v) const { return v; }
  int edge_dof(int e, int j) const { return num_vertices * vertex_dofs + e * dofs_per_edge + j; }
  int cell_dof(int c, int a) const { return num_vertices * vertex_dofs + num_edges * dofs_per_edge + c * dofs_per_cell + a; }
  /// Local DOF i of cell c -> total index, in the local element order.
  std::vector<int> cell_dofs(const PolygonalMesh& mesh, int c) const;

  /// Free-DOF vector -> total vector with zeros at eliminated DOFs.
  Eigen::VectorXd expand(const Eigen::VectorXd& free) const;
  Eigen::VectorXd restrict_free(const Eigen::VectorXd& total) const;
};

DofMap build_dof_map(const PolygonalMesh& mesh, SpaceKind space, int k, BoundaryCondition bc);

/// recipe: per-cell alpha_P, beta_P are folded into A2 and M2, so the global
/// alpha and beta are multipliers of the recipe. raw: unit stabilization.
enum class ParameterMode { Recipe, Raw };
ParameterMode parse_parameter_mode(std::string_view name);  // "recipe" | "raw"
std::string to_string(ParameterMode m);

struct AssemblyOptions {
  StiffnessStab stab_a = StiffnessStab::Dofi;
  MassStab stab_b = MassStab::Dofi;
  ParameterMode mode = ParameterMode::Recipe;
};

struct PencilInfo {
  int k = 1;
  SpaceKind space = SpaceKind::Conforming;
  BoundaryCondition bc = BoundaryCondition::Dirichlet;
  AssemblyOptions options;
  std::string mesh_id;
  int num_cells = 0;
};

/// A(alpha) = A1 + alpha A2 and M(beta) = M1 + beta M2 on the free DOFs.
struct AssembledPencil {
  SparseMatrix A1, A2, M1, M2;
  PencilInfo info;
  std::vector<double> alpha_P, beta_P;

  SparseMatrix A(double alpha) const { return A1 + alpha * A2; }
  SparseMatrix M(double beta) const { return M1 + beta * M2; }
  int size() const { return static_cast<int>(A1.rows()); }
};

/// Short content hash of vertex coordinates and cell lists.
std::string mesh_id(const PolygonalMesh& mesh);

AssembledPencil assemble_pencil(const PolygonalMesh& mesh, const DofMap& dofs, const AssemblyOptions& options = {});

/// Free-DOF load vector with entries int_P f Pi0(phi_i), summed over cells.
Eigen::VectorXd assemble_load(const PolygonalMesh& mesh, const DofMap& dofs, const ScalarFunction& f);

/// Total-length vector of the degrees of freedom of f.
Eigen::VectorXd interpolate(const PolygonalMesh& mesh, const DofMap& dofs, const ScalarFunction& f);

/// MatrixMarket coordinate format, symmetric storage (lower triangle).
void write_matrix_market(const SparseMatrix& S, const std::filesystem::path& path);

}  // namespace vemeig
