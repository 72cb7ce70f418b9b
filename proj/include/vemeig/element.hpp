#pragma once

#include "vemeig/geometry.hpp"
#include "vemeig/polybasis.hpp"

#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace vemeig {

enum class SpaceKind { Conforming, Nonconforming };
enum class StiffnessStab { Dofi, Diagonal };
enum class MassStab { Dofi, Boundary, None };

SpaceKind parse_space(std::string_view name);  // "conf" | "nonconf"
StiffnessStab parse_stiffness_stab(std::string_view name);  // "dofi" | "diagonal"
MassStab parse_mass_stab(std::string_view name);  // "dofi" | "boundary" | "none"
std::string to_string(SpaceKind s);
std::string to_string(StiffnessStab s);
std::string to_string(MassStab s);

/// Local degrees of freedom of one cell, in the order vertex values, edge
/// moments (edge by edge in cell-cycle order), interior moments.
///
/// Conforming: v(V_i); (1/|e|) int_e v t^j ds for j <= k-2; (1/|P|) int_P v m_a dx for |a| <= k-2.
/// Nonconforming: (1/|e|) int_e v t^j ds for j <= k-1; interior moments as above.
/// Here t = ((x - x_e) . tau_e) / |e| in [-1/2, 1/2] uses the global edge orientation tau_e.
struct DofLayout {
  SpaceKind space = SpaceKind::Conforming;
  int k = 1;
  int num_vertices = 0;
  int vertex_dofs = 0;
  int dofs_per_edge = 0;
  int interior_dofs = 0;

  int size() const { return vertex_dofs + num_vertices * dofs_per_edge + interior_dofs; }
  int edge_offset(int e) const { return vertex_dofs + e * dofs_per_edge; }
  int interior_offset() const { return vertex_dofs + num_vertices * dofs_per_edge; }
};

/// Throws MeshError (with the cell id) on degenerate cells: tiny area or
/// collinear consecutive vertices.
DofLayout build_dof_layout(const CellGeometry& cell, SpaceKind space, int k);

struct ProjectorPack {
  Eigen::MatrixXd pinabla_coeff;  // dim P_k x N_P
  Eigen::MatrixXd pinabla_dof;    // N_P x N_P
  Eigen::MatrixXd pi0_coeff;
  Eigen::MatrixXd pi0_dof;
};

/// Split local matrices. Ks and Ms are the stabilizations at unit parameter;
/// recipe_alpha / recipe_beta are the per-cell multipliers applied in recipe
/// mode (alpha_P and beta_P for the dofi strategies, 1 for the others, whose
/// scaling is built in).
struct LocalMatrices {
  Eigen::MatrixXd Kc, Ks, Mc, Ms;
  double alpha_P = 0.0;
  double beta_P = 0.0;
  double recipe_alpha = 1.0;
  double recipe_beta = 1.0;

  Eigen::MatrixXd stiffness(double alpha) const { return Kc + alpha * Ks; }
  Eigen::MatrixXd mass(double beta) const { return Mc + beta * Ms; }
};

using ScalarFunction = std::function<double(const Point&)>;

/// Virtual element of order k on one polygonal cell.
class LocalElement {
 public:
  LocalElement(CellGeometry cell, SpaceKind space, int k);

  const CellGeometry& cell() const { return cell_; }
  const DofLayout& layout() const { return layout_; }
  const ScaledMonomials& basis() const { return basis_; }
  int k() const { return layout_.k; }
  int num_dofs() const { return layout_.size(); }

  const ProjectorPack& projectors() const { return proj_; }
  /// int_P grad m_a . grad m_b
  const Eigen::MatrixXd& stiffness_gram() const { return G_; }
  /// int_P m_a m_b
  const Eigen::MatrixXd& mass_gram() const { return H_; }
  /// Column j holds the degrees of freedom of m_j.
  const Eigen::MatrixXd& monomial_dofs() const { return D_; }

  /// Trace of a virtual function on local edge e, sampled at the edge Gauss
  /// points, as a linear map of the local DOF vector. Conforming traces are
  /// exact; nonconforming traces are L2(e) projections onto P_{k-1}(e).
  const Eigen::MatrixXd& edge_trace(int e) const { return traces_[static_cast<std::size_t>(e)]; }
  /// Gauss points of local edge e (physical coordinates) and weights (summing to |e|).
  const std::vector<Point>& edge_points(int e) const { return edge_pts_[static_cast<std::size_t>(e)]; }
  const std::vector<double>& edge_weights(int e) const { return edge_wts_[static_cast<std::size_t>(e)]; }

  /// Degrees of freedom of a smooth function (quadrature-based).
  Eigen::VectorXd interpolate(const ScalarFunction& f) const;
  Eigen::VectorXd interpolate_polynomial(const Eigen::VectorXd& coeffs) const { return D_ * coeffs; }

  LocalMatrices matrices(StiffnessStab stab_a, MassStab stab_b) const;
  /// int_P f Pi0(phi_i) for every local basis function phi_i.
  Eigen::VectorXd load(const ScalarFunction& f) const;

 private:
  void build_edges();
  void build_projectors();

  CellGeometry cell_;
  DofLayout layout_;
  ScaledMonomials basis_;
  Eigen::MatrixXd G_, H_, D_;
  std::vector<Eigen::MatrixXd> traces_;
  std::vector<std::vector<Point>> edge_pts_;
  std::vector<std::vector<double>> edge_wts_;
  std::vector<std::vector<double>> edge_t_;  // Gauss nodes in [-1/2, 1/2], global orientation
  ProjectorPack proj_;
};

}  // namespace vemeig
