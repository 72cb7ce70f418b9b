#pragma once

#include "vemeig/assembly.hpp"
#include "vemeig/element.hpp"

#include <array>
#include <cmath>
#include <random>

namespace vemeig::oracles {

// a^P(v, p) from the DOFs of v by integration by parts, with an independent
// trace reconstruction in arc length from the local start vertex and a
// least-squares fit of Delta p.
inline double energy_oracle(const LocalElement& el, const Eigen::VectorXd& v, const Eigen::VectorXd& pc) {
  const auto& cell = el.cell();
  const auto& L = el.layout();
  const int k = el.k();
  const ScaledMonomials& m = el.basis();
  double s = 0.0;
  // boundary part
  auto [gx, gw] = gauss_legendre_01(k + 3);
  for (int e = 0; e < cell.num_vertices(); ++e) {
    const Point a = cell.vertex(e), b = cell.vertex(e + 1);
    const double len = (b - a).norm();
    const Point n = Point((b - a).y(), -(b - a).x()) / len;
    const bool fwd = cell.edge_forward[static_cast<std::size_t>(e)];
    // moments are defined with t = +-(r - 1/2) where r in [0,1] runs from a to b
    const int deg = L.space == SpaceKind::Conforming ? k : k - 1;
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(deg + 1, deg + 1);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(deg + 1);
    int row = 0;
    if (L.space == SpaceKind::Conforming) {
      for (int i = 0; i <= deg; ++i) A(0, i) = i == 0 ? 1.0 : 0.0, A(1, i) = 1.0;
      rhs(0) = v(e);
      rhs(1) = v((e + 1) % cell.num_vertices());
      row = 2;
    }
    for (int j = 0; j < L.dofs_per_edge; ++j, ++row) {
      for (std::size_t q = 0; q < gx.size(); ++q) {
        const double t = (fwd ? 1.0 : -1.0) * (gx[q] - 0.5);
        for (int i = 0; i <= deg; ++i) A(row, i) += gw[q] * std::pow(t, j) * std::pow(gx[q], i);
      }
      rhs(row) = v(L.edge_offset(e) + j);
    }
    const Eigen::VectorXd c = A.fullPivLu().solve(rhs);
    for (std::size_t q = 0; q < gx.size(); ++q) {
      double tr = 0.0;
      for (int i = 0; i <= deg; ++i) tr += c(i) * std::pow(gx[q], i);
      const Point x = a + gx[q] * (b - a);
      s += gw[q] * len * tr * (m.gradients(x).transpose() * pc).dot(n);
    }
  }
  // interior part: -int v Delta p, with Delta p fitted in P_{k-2}
  if (k >= 2) {
    const ScaledMonomials low(k - 2, m.center(), m.scale());
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> U(-0.3, 0.3);
    const int n = 4 * low.size();
    Eigen::MatrixXd X(n, low.size());
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) {
      const Point x = m.center() + m.scale() * Point(U(rng), U(rng));
      X.row(i) = low.values(x).transpose();
      y(i) = m.laplacians(x).dot(pc);
    }
    const Eigen::VectorXd lc = X.colPivHouseholderQr().solve(y);
    s -= cell.area * lc.dot(v.segment(L.interior_offset(), low.size()));
  }
  return s;
}

// Gradients of the barycentric coordinates of a triangle.
inline std::array<Point, 3> barycentric_gradients(const Point& a, const Point& b, const Point& c, double& area) {
  const double det = (b - a).x() * (c - a).y() - (b - a).y() * (c - a).x();
  area = 0.5 * det;
  const std::array<Point, 3> p{a, b, c};
  std::array<Point, 3> g;
  for (int i = 0; i < 3; ++i) {
    const Point& q = p[(i + 1) % 3];
    const Point& r = p[(i + 2) % 3];
    g[i] = Point(q.y() - r.y(), r.x() - q.x()) / det;
  }
  return g;
}

inline Eigen::MatrixXd p1_stiffness_oracle(const PolygonalMesh& mesh, const DofMap& dofs) {
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(dofs.num_free, dofs.num_free);
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const auto& v = mesh.cell(c);
    double area = 0;
    const auto g = barycentric_gradients(mesh.vertices()[v[0]], mesh.vertices()[v[1]], mesh.vertices()[v[2]], area);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        const int gi = dofs.free_index[v[i]], gj = dofs.free_index[v[j]];
        if (gi >= 0 && gj >= 0) K(gi, gj) += area * g[i].dot(g[j]);
      }
  }
  return K;
}

// Crouzeix-Raviart: the basis function of the edge opposite vertex i is 1 - 2 lambda_i.
inline Eigen::MatrixXd cr_stiffness_oracle(const PolygonalMesh& mesh, const DofMap& dofs) {
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(dofs.num_free, dofs.num_free);
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const auto& v = mesh.cell(c);
    double area = 0;
    const auto g = barycentric_gradients(mesh.vertices()[v[0]], mesh.vertices()[v[1]], mesh.vertices()[v[2]], area);
    std::array<int, 3> edge_of;
    for (int e = 0; e < mesh.num_edges(); ++e) {
      const auto& E = mesh.edges()[e];
      for (int i = 0; i < 3; ++i) {
        const int a = v[(i + 1) % 3], b = v[(i + 2) % 3];
        if ((E.v0 == a && E.v1 == b) || (E.v0 == b && E.v1 == a)) edge_of[i] = e;
      }
    }
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        const int gi = dofs.free_index[dofs.edge_dof(edge_of[i], 0)];
        const int gj = dofs.free_index[dofs.edge_dof(edge_of[j], 0)];
        if (gi >= 0 && gj >= 0) K(gi, gj) += 4 * area * g[i].dot(g[j]);
      }
  }
  return K;
}

}  // namespace vemeig::oracles
