#include "vemeig/polybasis.hpp"

#include <cmath>
#include <numbers>

namespace vemeig {

ScaledMonomials::ScaledMonomials(int degree, Point center, double scale)
    : degree_(degree), center_(std::move(center)), scale_(scale) {
  if (degree < 0) throw std::invalid_argument("monomial degree must be >= 0");
  if (!(scale > 0)) throw std::invalid_argument("monomial scale must be positive");
}

std::pair<int, int> ScaledMonomials::exponents(int index) {
  int d = 0;
  while (dim(d) <= index) ++d;
  const int b = index - dim(d - 1);
  return {d - b, b};
}

namespace {

// powers[j] = t^j for j <= n
std::vector<double> powers(double t, int n) {
  std::vector<double> p(static_cast<std::size_t>(std::max(n, 0) + 1), 1.0);
  for (int j = 1; j <= n; ++j) p[static_cast<std::size_t>(j)] = p[static_cast<std::size_t>(j - 1)] * t;
  return p;
}

}  // namespace

Eigen::VectorXd ScaledMonomials::values(const Point& x) const {
  const Point s = (x - center_) / scale_;
  const auto px = powers(s.x(), degree_);
  const auto py = powers(s.y(), degree_);
  Eigen::VectorXd v(size());
  for (int i = 0; i < size(); ++i) {
    auto [a, b] = exponents(i);
    v(i) = px[static_cast<std::size_t>(a)] * py[static_cast<std::size_t>(b)];
  }
  return v;
}

Eigen::MatrixX2d ScaledMonomials::gradients(const Point& x) const {
  const Point s = (x - center_) / scale_;
  const auto px = powers(s.x(), degree_);
  const auto py = powers(s.y(), degree_);
  Eigen::MatrixX2d g(size(), 2);
  for (int i = 0; i < size(); ++i) {
    auto [a, b] = exponents(i);
    g(i, 0) = a > 0 ? a * px[static_cast<std::size_t>(a - 1)] * py[static_cast<std::size_t>(b)] / scale_ : 0.0;
    g(i, 1) = b > 0 ? b * px[static_cast<std::size_t>(a)] * py[static_cast<std::size_t>(b - 1)] / scale_ : 0.0;
  }
  return g;
}

Eigen::VectorXd ScaledMonomials::laplacians(const Point& x) const {
  const Point s = (x - center_) / scale_;
  const auto px = powers(s.x(), degree_);
  const auto py = powers(s.y(), degree_);
  const double h2 = scale_ * scale_;
  Eigen::VectorXd v(size());
  for (int i = 0; i < size(); ++i) {
    auto [a, b] = exponents(i);
    double l = 0.0;
    if (a > 1) l += a * (a - 1) * px[static_cast<std::size_t>(a - 2)] * py[static_cast<std::size_t>(b)];
    if (b > 1) l += b * (b - 1) * px[static_cast<std::size_t>(a)] * py[static_cast<std::size_t>(b - 2)];
    v(i) = l / h2;
  }
  return v;
}

double ScaledMonomials::evaluate(const Eigen::VectorXd& coeffs, const Point& x) const { return coeffs.dot(values(x)); }

Eigen::MatrixXd ScaledMonomials::laplacian_coefficients() const {
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(dim(degree_ - 2), size());
  const double h2 = scale_ * scale_;
  for (int i = 0; i < size(); ++i) {
    auto [a, b] = exponents(i);
    if (a > 1) L(index(a - 2, b), i) += a * (a - 1) / h2;
    if (b > 1) L(index(a, b - 2), i) += b * (b - 1) / h2;
  }
  return L;
}

double QuadratureRule::total_weight() const {
  double s = 0.0;
  for (double w : weights) s += w;
  return s;
}

std::pair<std::vector<double>, std::vector<double>> gauss_legendre_01(int n) {
  if (n < 1) throw std::invalid_argument("Gauss rule needs at least one point");
  std::vector<double> x(static_cast<std::size_t>(n)), w(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    // Newton iteration on P_n from the Chebyshev-like initial guess.
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = z;
      for (int j = 2; j <= n; ++j) {
        const double p2 = ((2.0 * j - 1.0) * z * p1 - (j - 1.0) * p0) / j;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (z * p1 - p0) / (z * z - 1.0);
      const double dz = p1 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    double p0 = 1.0, p1 = z;
    for (int j = 2; j <= n; ++j) {
      const double p2 = ((2.0 * j - 1.0) * z * p1 - (j - 1.0) * p0) / j;
      p0 = p1;
      p1 = p2;
    }
    dp = n * (z * p1 - p0) / (z * z - 1.0);
    // Map [-1,1] -> [0,1], ascending order.
    x[static_cast<std::size_t>(n - 1 - i)] = 0.5 * (z + 1.0);
    w[static_cast<std::size_t>(n - 1 - i)] = 1.0 / ((1.0 - z * z) * dp * dp);
  }
  return {x, w};
}

QuadratureRule triangle_quadrature(const Point& a, const Point& b, const Point& c, int d) {
  if (d < 0) throw std::invalid_argument("quadrature exactness must be >= 0");
  const int nu = (d + 2) / 2 + 1;  // degree d+1 in u (Jacobian factor)
  const int nv = (d + 1) / 2 + 1;
  const auto [xu, wu] = gauss_legendre_01(nu);
  const auto [xv, wv] = gauss_legendre_01(nv);
  const double area2 = std::abs((b - a).x() * (c - a).y() - (b - a).y() * (c - a).x());
  QuadratureRule rule;
  rule.exactness = d;
  rule.points.reserve(static_cast<std::size_t>(nu * nv));
  rule.weights.reserve(static_cast<std::size_t>(nu * nv));
  for (int i = 0; i < nu; ++i)
    for (int j = 0; j < nv; ++j) {
      const double u = xu[static_cast<std::size_t>(i)];
      const double v = xv[static_cast<std::size_t>(j)] * (1.0 - u);
      rule.points.push_back(a + u * (b - a) + v * (c - a));
      rule.weights.push_back(area2 * wu[static_cast<std::size_t>(i)] * wv[static_cast<std::size_t>(j)] * (1.0 - u));
    }
  return rule;
}

namespace {

double cross(const Point& a, const Point& b) { return a.x() * b.y() - a.y() * b.x(); }

bool point_in_triangle(const Point& p, const Point& a, const Point& b, const Point& c) {
  const double d1 = cross(b - a, p - a);
  const double d2 = cross(c - b, p - b);
  const double d3 = cross(a - c, p - c);
  return d1 >= 0 && d2 >= 0 && d3 >= 0;
}

}  // namespace

std::vector<std::array<Point, 3>> triangulate_polygon(std::span<const Point> polygon) {
  const std::size_t n = polygon.size();
  if (n < 3) throw MeshError("polygon needs at least 3 vertices");
  if (!is_simple(polygon)) throw MeshError("cannot triangulate a self-intersecting polygon");
  if (!(signed_area(polygon) > 0)) throw MeshError("cannot triangulate a clockwise or degenerate polygon");
  std::vector<std::array<Point, 3>> tris;
  if (n == 3) {
    tris.push_back({polygon[0], polygon[1], polygon[2]});
    return tris;
  }
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  while (idx.size() > 3) {
    const std::size_t m = idx.size();
    bool clipped = false;
    for (std::size_t k = 0; k < m && !clipped; ++k) {
      const Point& a = polygon[idx[(k + m - 1) % m]];
      const Point& b = polygon[idx[k]];
      const Point& c = polygon[idx[(k + 1) % m]];
      if (cross(b - a, c - b) <= 1e-14 * (b - a).norm() * (c - b).norm()) continue;  // reflex or flat
      bool empty = true;
      for (std::size_t q = 0; q < m && empty; ++q) {
        if (q == k || q == (k + 1) % m || q == (k + m - 1) % m) continue;
        const Point& p = polygon[idx[q]];
        if (point_in_triangle(p, a, b, c)) empty = false;
      }
      if (!empty) continue;
      tris.push_back({a, b, c});
      idx.erase(idx.begin() + static_cast<std::ptrdiff_t>(k));
      clipped = true;
    }
    if (!clipped) throw MeshError("ear clipping failed: polygon is not simple");
  }
  tris.push_back({polygon[idx[0]], polygon[idx[1]], polygon[idx[2]]});
  return tris;
}

QuadratureRule polygon_quadrature(std::span<const Point> polygon, int d) {
  QuadratureRule rule;
  rule.exactness = d;
  for (const auto& t : triangulate_polygon(polygon)) {
    auto tr = triangle_quadrature(t[0], t[1], t[2], d);
    rule.points.insert(rule.points.end(), tr.points.begin(), tr.points.end());
    rule.weights.insert(rule.weights.end(), tr.weights.begin(), tr.weights.end());
  }
  return rule;
}

Eigen::MatrixXd monomial_gram(const CellGeometry& cell, int k) {
  const ScaledMonomials basis(k, cell.centroid, cell.diameter);
  const auto rule = polygon_quadrature(cell.vertices, 2 * k);
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(basis.size(), basis.size());
  for (std::size_t q = 0; q < rule.size(); ++q) {
    const Eigen::VectorXd m = basis.values(rule.points[q]);
    H.noalias() += rule.weights[q] * m * m.transpose();
  }
  return 0.5 * (H + H.transpose());
}

}  // namespace vemeig
