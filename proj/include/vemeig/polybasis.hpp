#pragma once

#include "vemeig/geometry.hpp"

#include <array>
#include <utility>
#include <vector>

namespace vemeig {

/// Scaled monomials m_a(x) = ((x - x_P) / h_P)^a, |a| <= k, in graded
/// lexicographic order: (0,0), (1,0), (0,1), (2,0), (1,1), (0,2), ...
class ScaledMonomials {
 public:
  ScaledMonomials(int degree, Point center, double scale);

  static int dim(int degree) { return degree < 0 ? 0 : (degree + 1) * (degree + 2) / 2; }
  /// Exponents (a, b) of the basis function with the given index.
  static std::pair<int, int> exponents(int index);
  static int index(int a, int b) { return dim(a + b - 1) + b; }

  int degree() const { return degree_; }
  int size() const { return dim(degree_); }
  const Point& center() const { return center_; }
  double scale() const { return scale_; }

  Eigen::VectorXd values(const Point& x) const;
  /// Row i holds the gradient of m_i.
  Eigen::MatrixX2d gradients(const Point& x) const;
  Eigen::VectorXd laplacians(const Point& x) const;
  /// Evaluates sum_i coeffs_i m_i(x).
  double evaluate(const Eigen::VectorXd& coeffs, const Point& x) const;

  /// Coefficients of Delta m_i in the basis of degree k-2: matrix of size dim(k-2) x dim(k).
  Eigen::MatrixXd laplacian_coefficients() const;

 private:
  int degree_;
  Point center_;
  double scale_;
};

struct QuadratureRule {
  std::vector<Point> points;
  std::vector<double> weights;
  int exactness = 0;

  std::size_t size() const { return points.size(); }
  double total_weight() const;
};

/// Gauss-Legendre nodes and weights on [0, 1].
std::pair<std::vector<double>, std::vector<double>> gauss_legendre_01(int n);

/// Collapsed (Duffy) Gauss product rule on a triangle, exact for total degree <= d.
QuadratureRule triangle_quadrature(const Point& a, const Point& b, const Point& c, int d);

/// Ear-clipping triangulation of a simple counterclockwise polygon (convex or not).
/// Throws MeshError for a self-intersecting or degenerate polygon.
std::vector<std::array<Point, 3>> triangulate_polygon(std::span<const Point> polygon);

/// Composite rule on the triangulation of the polygon, exact for total degree <= d.
QuadratureRule polygon_quadrature(std::span<const Point> polygon, int d);

/// H_ab = int_P m_a m_b dx for the scaled monomials of degree k on the cell.
Eigen::MatrixXd monomial_gram(const CellGeometry& cell, int k);

}  // namespace vemeig
