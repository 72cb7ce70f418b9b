#include "vemeig/element.hpp"

#include <cmath>

namespace vemeig {

SpaceKind parse_space(std::string_view name) {
  if (name == "conf" || name == "conforming") return SpaceKind::Conforming;
  if (name == "nonconf" || name == "nonconforming") return SpaceKind::Nonconforming;
  throw ConfigError("unknown space '" + std::string(name) + "' (expected conf|nonconf)");
}

StiffnessStab parse_stiffness_stab(std::string_view name) {
  if (name == "dofi") return StiffnessStab::Dofi;
  if (name == "diagonal") return StiffnessStab::Diagonal;
  throw ConfigError("unknown stiffness stabilization '" + std::string(name) + "' (expected dofi|diagonal)");
}

MassStab parse_mass_stab(std::string_view name) {
  if (name == "dofi") return MassStab::Dofi;
  if (name == "boundary") return MassStab::Boundary;
  if (name == "none") return MassStab::None;
  throw ConfigError("unknown mass stabilization '" + std::string(name) + "' (expected dofi|boundary|none)");
}

std::string to_string(SpaceKind s) { return s == SpaceKind::Conforming ? "conf" : "nonconf"; }
std::string to_string(StiffnessStab s) { return s == StiffnessStab::Dofi ? "dofi" : "diagonal"; }
std::string to_string(MassStab s) {
  switch (s) {
    case MassStab::Dofi: return "dofi";
    case MassStab::Boundary: return "boundary";
    case MassStab::None: return "none";
  }
  return "?";
}

DofLayout build_dof_layout(const CellGeometry& cell, SpaceKind space, int k) {
  if (k < 1) throw ConfigError("polynomial order k must be >= 1");
  const std::string tag = "cell " + std::to_string(cell.id);
  if (!(cell.area >= 1e-14)) throw MeshError("degenerate " + tag + ": area " + std::to_string(cell.area));
  const int n = cell.num_vertices();
  for (int i = 0; i < n; ++i) {
    const Point u = cell.vertex(i + 1) - cell.vertex(i);
    const Point w = cell.vertex(i + 2) - cell.vertex(i + 1);
    if (std::abs(u.x() * w.y() - u.y() * w.x()) <= 1e-12 * u.norm() * w.norm())
      throw MeshError("degenerate " + tag + ": collinear consecutive vertices at local vertex " +
                      std::to_string((i + 1) % n));
  }
  DofLayout L;
  L.space = space;
  L.k = k;
  L.num_vertices = n;
  L.interior_dofs = k * (k - 1) / 2;
  if (space == SpaceKind::Conforming) {
    L.vertex_dofs = n;
    L.dofs_per_edge = k - 1;
  } else {
    L.vertex_dofs = 0;
    L.dofs_per_edge = k;
  }
  return L;
}

namespace {

// int_{-1/2}^{1/2} t^p dt
double centered_moment(int p) { return p % 2 ? 0.0 : 2.0 * std::pow(0.5, p + 1) / (p + 1); }

}  // namespace

LocalElement::LocalElement(CellGeometry cell, SpaceKind space, int k)
    : cell_(std::move(cell)),
      layout_(build_dof_layout(cell_, space, k)),
      basis_(k, cell_.centroid, cell_.diameter) {
  build_edges();
  build_projectors();
}

void LocalElement::build_edges() {
  const int k = layout_.k;
  const int n = cell_.num_vertices();
  const int N = layout_.size();
  const int dim = basis_.size();
  auto [s, w] = gauss_legendre_01(k + 1);
  const int nq = k + 1;

  D_ = Eigen::MatrixXd::Zero(N, dim);
  if (layout_.vertex_dofs)
    for (int i = 0; i < n; ++i) D_.row(i) = basis_.values(cell_.vertex(i)).transpose();

  traces_.assign(static_cast<std::size_t>(n), {});
  edge_pts_.assign(static_cast<std::size_t>(n), {});
  edge_wts_.assign(static_cast<std::size_t>(n), {});
  edge_t_.assign(static_cast<std::size_t>(n), {});
  for (int e = 0; e < n; ++e) {
    const double len = cell_.edge_length(e);
    const Point mid = cell_.edge_midpoint(e);
    const Point tau = cell_.global_tangent(e);
    auto& pts = edge_pts_[static_cast<std::size_t>(e)];
    auto& wts = edge_wts_[static_cast<std::size_t>(e)];
    auto& ts = edge_t_[static_cast<std::size_t>(e)];
    for (int q = 0; q < nq; ++q) {
      const double t = s[static_cast<std::size_t>(q)] - 0.5;
      ts.push_back(t);
      pts.push_back(mid + t * len * tau);
      wts.push_back(w[static_cast<std::size_t>(q)] * len);
    }
    const int off = layout_.edge_offset(e);
    for (int j = 0; j < layout_.dofs_per_edge; ++j)
      for (int q = 0; q < nq; ++q)
        D_.row(off + j) += w[static_cast<std::size_t>(q)] * std::pow(ts[static_cast<std::size_t>(q)], j) *
                           basis_.values(pts[static_cast<std::size_t>(q)]).transpose();

    // Polynomial trace in t: coefficients from the DOFs touching this edge.
    const int deg = layout_.space == SpaceKind::Conforming ? k : k - 1;
    Eigen::MatrixXd V = Eigen::MatrixXd::Zero(deg + 1, deg + 1);
    Eigen::MatrixXd S = Eigen::MatrixXd::Zero(deg + 1, N);
    int row = 0;
    if (layout_.space == SpaceKind::Conforming) {
      const bool fwd = cell_.edge_forward[static_cast<std::size_t>(e)];
      const int first = fwd ? e : (e + 1) % n;
      const int last = fwd ? (e + 1) % n : e;
      for (int i = 0; i <= deg; ++i) {
        V(0, i) = std::pow(-0.5, i);
        V(1, i) = std::pow(0.5, i);
      }
      S(0, first) = 1.0;
      S(1, last) = 1.0;
      row = 2;
    }
    for (int j = 0; j < layout_.dofs_per_edge; ++j, ++row) {
      for (int i = 0; i <= deg; ++i) V(row, i) = centered_moment(i + j);
      S(row, off + j) = 1.0;
    }
    Eigen::MatrixXd Phi(nq, deg + 1);
    for (int q = 0; q < nq; ++q)
      for (int i = 0; i <= deg; ++i) Phi(q, i) = std::pow(ts[static_cast<std::size_t>(q)], i);
    traces_[static_cast<std::size_t>(e)] = Phi * V.fullPivLu().solve(S);
  }
}

void LocalElement::build_projectors() {
  const int k = layout_.k;
  const int N = layout_.size();
  const int dim = basis_.size();
  const int nL = ScaledMonomials::dim(k - 2);
  const int io = layout_.interior_offset();
  const std::string tag = "cell " + std::to_string(cell_.id);

  const auto rule = polygon_quadrature(cell_.vertices, 2 * k);
  G_ = Eigen::MatrixXd::Zero(dim, dim);
  H_ = Eigen::MatrixXd::Zero(dim, dim);
  for (std::size_t q = 0; q < rule.size(); ++q) {
    const Eigen::VectorXd m = basis_.values(rule.points[q]);
    const Eigen::MatrixX2d g = basis_.gradients(rule.points[q]);
    H_.noalias() += rule.weights[q] * m * m.transpose();
    G_.noalias() += rule.weights[q] * g * g.transpose();
  }
  H_ = 0.5 * (H_ + H_.transpose());
  G_ = 0.5 * (G_ + G_.transpose());
  for (int i = 0; i < nL; ++i) D_.row(io + i) = H_.row(i) / cell_.area;

  // Energy projection: G C = B with the boundary-average constraint via a multiplier.
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(dim, N);
  Eigen::RowVectorXd R = Eigen::RowVectorXd::Zero(N);
  Eigen::VectorXd p = Eigen::VectorXd::Zero(dim);
  const Eigen::MatrixXd lap = basis_.laplacian_coefficients();
  for (int b = 0; b < dim; ++b)
    for (int g = 0; g < nL; ++g) B(b, io + g) -= cell_.area * lap(g, b);
  for (int e = 0; e < cell_.num_vertices(); ++e) {
    const Point n = cell_.outward_normal(e);
    const auto& T = traces_[static_cast<std::size_t>(e)];
    const auto& pts = edge_pts_[static_cast<std::size_t>(e)];
    const auto& wts = edge_wts_[static_cast<std::size_t>(e)];
    for (std::size_t q = 0; q < pts.size(); ++q) {
      const Eigen::VectorXd dn = basis_.gradients(pts[q]) * n;
      B.noalias() += wts[q] * dn * T.row(static_cast<Eigen::Index>(q));
      R += wts[q] * T.row(static_cast<Eigen::Index>(q));
      p += wts[q] * basis_.values(pts[q]);
    }
  }
  Eigen::MatrixXd Sys = Eigen::MatrixXd::Zero(dim + 1, dim + 1);
  Sys.topLeftCorner(dim, dim) = G_;
  Sys.topRightCorner(dim, 1) = p;
  Sys.bottomLeftCorner(1, dim) = p.transpose();
  Eigen::MatrixXd rhs(dim + 1, N);
  rhs.topRows(dim) = B;
  rhs.bottomRows(1) = R;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(Sys);
  if (lu.rank() < dim + 1) throw NumericalError("singular energy projection system on " + tag);
  proj_.pinabla_coeff = lu.solve(rhs).topRows(dim);
  proj_.pinabla_dof = D_ * proj_.pinabla_coeff;

  // L2 projection. Moments against P_{k-2} are DOFs; against its L2-orthogonal
  // complement in P_k they coincide with those of the energy projection. Written
  // as a correction of the energy projection, only the P_{k-2} block is solved.
  const Eigen::MatrixXd& C = proj_.pinabla_coeff;
  proj_.pi0_coeff = C;
  if (nL > 0) {
    Eigen::LLT<Eigen::MatrixXd> HLL(H_.topLeftCorner(nL, nL));
    if (HLL.info() != Eigen::Success) throw NumericalError("mass Gram matrix not positive definite on " + tag);
    Eigen::MatrixXd r = -H_.topRows(nL) * C;
    for (int g = 0; g < nL; ++g) r(g, io + g) += cell_.area;
    proj_.pi0_coeff.topRows(nL) += HLL.solve(r);
  }
  proj_.pi0_dof = D_ * proj_.pi0_coeff;
}

Eigen::VectorXd LocalElement::interpolate(const ScalarFunction& f) const {
  const int k = layout_.k;
  const int n = cell_.num_vertices();
  Eigen::VectorXd d = Eigen::VectorXd::Zero(layout_.size());
  if (layout_.vertex_dofs)
    for (int i = 0; i < n; ++i) d(i) = f(cell_.vertex(i));
  auto [s, w] = gauss_legendre_01(k + 4);
  for (int e = 0; e < n; ++e) {
    const double len = cell_.edge_length(e);
    const Point mid = cell_.edge_midpoint(e);
    const Point tau = cell_.global_tangent(e);
    for (std::size_t q = 0; q < s.size(); ++q) {
      const double t = s[q] - 0.5;
      const double fv = f(mid + t * len * tau);
      for (int j = 0; j < layout_.dofs_per_edge; ++j) d(layout_.edge_offset(e) + j) += w[q] * std::pow(t, j) * fv;
    }
  }
  if (layout_.interior_dofs) {
    const ScaledMonomials low(k - 2, cell_.centroid, cell_.diameter);
    const auto rule = polygon_quadrature(cell_.vertices, 2 * k + 2);
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(low.size());
    for (std::size_t q = 0; q < rule.size(); ++q) acc += rule.weights[q] * f(rule.points[q]) * low.values(rule.points[q]);
    d.segment(layout_.interior_offset(), low.size()) = acc / cell_.area;
  }
  return d;
}

LocalMatrices LocalElement::matrices(StiffnessStab stab_a, MassStab stab_b) const {
  const int N = layout_.size();
  const int k = layout_.k;
  const double h = cell_.diameter;
  LocalMatrices L;
  const Eigen::MatrixXd& C = proj_.pinabla_coeff;
  const Eigen::MatrixXd& P0 = proj_.pi0_coeff;
  L.Kc = C.transpose() * G_ * C;
  L.Kc = 0.5 * (L.Kc + L.Kc.transpose()).eval();
  L.Mc = P0.transpose() * H_ * P0;
  L.Mc = 0.5 * (L.Mc + L.Mc.transpose()).eval();
  L.alpha_P = L.Kc.trace() / N;
  L.beta_P = L.Mc.trace() / (h * h * N);

  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(N, N);
  const Eigen::MatrixXd Ra = I - proj_.pinabla_dof;
  if (stab_a == StiffnessStab::Dofi) {
    L.Ks = Ra.transpose() * Ra;
    L.recipe_alpha = L.alpha_P;
  } else {
    Eigen::VectorXd d(N);
    for (int i = 0; i < N; ++i) d(i) = std::max(1.0, L.Kc(i, i));
    L.Ks = Ra.transpose() * d.asDiagonal() * Ra;
    L.recipe_alpha = 1.0;
  }
  L.Ks = 0.5 * (L.Ks + L.Ks.transpose()).eval();

  const Eigen::MatrixXd Rb = I - proj_.pi0_dof;
  switch (stab_b) {
    case MassStab::Dofi:
      L.Ms = h * h * Rb.transpose() * Rb;
      L.recipe_beta = L.beta_P;
      break;
    case MassStab::Boundary: {
      L.Ms = Eigen::MatrixXd::Zero(N, N);
      for (int e = 0; e < cell_.num_vertices(); ++e) {
        const Eigen::MatrixXd Z = traces_[static_cast<std::size_t>(e)] * Rb;
        const auto& wts = edge_wts_[static_cast<std::size_t>(e)];
        const Eigen::Map<const Eigen::VectorXd> wv(wts.data(), static_cast<Eigen::Index>(wts.size()));
        L.Ms.noalias() += Z.transpose() * wv.asDiagonal() * Z;
      }
      L.Ms *= h / (k * k);
      L.recipe_beta = 1.0;
      break;
    }
    case MassStab::None:
      L.Ms = Eigen::MatrixXd::Zero(N, N);
      L.recipe_beta = 1.0;
      break;
  }
  L.Ms = 0.5 * (L.Ms + L.Ms.transpose()).eval();
  return L;
}

Eigen::VectorXd LocalElement::load(const ScalarFunction& f) const {
  const auto rule = polygon_quadrature(cell_.vertices, 2 * layout_.k + 2);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(basis_.size());
  for (std::size_t q = 0; q < rule.size(); ++q) b += rule.weights[q] * f(rule.points[q]) * basis_.values(rule.points[q]);
  return proj_.pi0_coeff.transpose() * b;
}

}  // namespace vemeig
