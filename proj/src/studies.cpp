#include "vemeig/studies.hpp"

#include "vemeig/io.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <iostream>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

namespace vemeig {

using Eigen::MatrixXd;
using Eigen::VectorXd;

std::vector<double> exact_square_spectrum(int n_lowest) {
  if (n_lowest <= 0) return {};
  // every value among the first n_lowest has i, j <= n_lowest
  std::vector<double> all;
  const int m = n_lowest + 1;
  for (int i = 1; i <= m; ++i)
    for (int j = 1; j <= m; ++j) all.push_back(double(i * i + j * j));
  std::sort(all.begin(), all.end());
  all.resize(static_cast<std::size_t>(n_lowest));
  return all;
}

namespace {

int parse_int(std::string_view s, std::string_view what) {
  int v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size())
    throw ConfigError("invalid " + std::string(what) + " '" + std::string(s) + "'");
  return v;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = s.find(sep, start);
    out.push_back(s.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

}  // namespace

double nominal_h(const PolygonalMesh& mesh) { return std::sqrt(mesh.total_area() / mesh.num_cells()); }

PolygonalMesh make_mesh(const Domain& domain, std::string_view source) {
  const auto parts = split(source, ':');
  if (parts[0] == "voronoi") {
    if (parts.size() != 3) throw ConfigError("mesh spec must be voronoi:N:SEED, got '" + std::string(source) + "'");
    const int n = parse_int(parts[1], "cell count");
    const int seed = parse_int(parts[2], "seed");
    if (n < 1) throw ConfigError("voronoi cell count must be positive");
    return build_voronoi_mesh(domain, {.n_seeds = n, .rng_seed = static_cast<std::uint64_t>(seed)});
  }
  if (parts[0] == "cartesian" || parts[0] == "triangle") {
    if (parts.size() != 2) throw ConfigError("mesh spec must be " + std::string(parts[0]) + ":N");
    const int n = parse_int(parts[1], "subdivision");
    if (n < 1) throw ConfigError("subdivision must be positive");
    return parts[0] == "cartesian" ? build_cartesian_mesh(domain, n) : build_triangle_mesh(domain, n);
  }
  if (!std::filesystem::exists(std::filesystem::path(source)))
    throw ConfigError("mesh '" + std::string(source) + "' is neither a generator spec nor an existing file");
  return load_mesh(std::filesystem::path(source));
}

SpectralResult solve_lowest(const AssembledPencil& pencil, double alpha, double beta, int n_lowest,
                            const SolveOptions& options) {
  const SparseMatrix A = pencil.A(alpha);
  const SparseMatrix M = pencil.M(beta);
  if (pencil.size() <= options.dense_limit) return solve_pencil(MatrixXd(A), MatrixXd(M), n_lowest, options.kernel_tol);
  SpectralResult res = solve_lowest_sparse(A, M, n_lowest);
  if (options.count_infinite && res.eigenvalues.size() > 0 && res.eigenvalues(0) > 0) {
    // same rule as the dense reciprocal solve: the numerical kernel of M
    res.num_infinite = kernel_dim(MatrixXd(M), options.kernel_tol);
    res.num_finite = pencil.size() - res.num_infinite;
  }
  return res;
}

double ConvergenceRecord::error(int m, int j) const {
  for (const auto& r : rows)
    if (r.eig_index == j && r.N_h == N_h[static_cast<std::size_t>(m)] && r.h == h[static_cast<std::size_t>(m)])
      return r.rel_err;
  return std::numeric_limits<double>::quiet_NaN();
}

double fit_loglog_slope(const std::vector<double>& h, const std::vector<double>& err, double floor, int* used) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    if (!(err[i] > floor)) continue;
    const double x = std::log(h[i]), y = std::log(err[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++n;
  }
  if (used) *used = n;
  if (n < 2) return std::numeric_limits<double>::quiet_NaN();
  const double den = n * sxx - sx * sx;
  if (den == 0) return std::numeric_limits<double>::quiet_NaN();
  return (n * sxy - sx * sy) / den;
}

ConvergenceRecord run_convergence(const ProblemSetup& setup, const std::vector<PolygonalMesh>& family,
                                  const std::vector<double>& reference, double error_floor, const SolveOptions& solve) {
  if (family.size() < 3) throw ConfigError("family needs ≥ 3 meshes");
  if (reference.empty()) throw ConfigError("no reference eigenvalues");
  const bool neumann = setup.bc == BoundaryCondition::Neumann;
  const int nref = static_cast<int>(reference.size());
  ConvergenceRecord rec;
  std::vector<std::vector<double>> errs(reference.size());
  for (const auto& mesh : family) {
    const DofMap dofs = build_dof_map(mesh, setup.space, setup.k, setup.bc);
    const AssembledPencil P = assemble_pencil(mesh, dofs, setup.assembly);
    const SpectralResult res = solve_lowest(P, setup.alpha, setup.beta, nref + (neumann ? 1 : 0), solve);
    std::vector<double> vals(res.eigenvalues.data(), res.eigenvalues.data() + res.eigenvalues.size());
    if (neumann) {
      if (vals.empty() || std::abs(vals.front()) > 1e-8 * std::max(1.0, vals.back()))
        throw NumericalError("Neumann problem without a numerically zero eigenvalue");
      vals.erase(vals.begin());
    }
    if (static_cast<int>(vals.size()) < nref) throw NumericalError("solver returned fewer eigenvalues than requested");
    const std::string id = mesh_id(mesh);
    const double h = nominal_h(mesh);
    rec.h.push_back(h);
    rec.N_h.push_back(dofs.num_free);
    for (int j = 0; j < nref; ++j) {
      ConvergenceRow row;
      row.mesh_id = id;
      row.h = h;
      row.N_h = dofs.num_free;
      row.eig_index = j + 1;
      row.lambda_ref = reference[static_cast<std::size_t>(j)];
      row.lambda_h = vals[static_cast<std::size_t>(j)];
      row.rel_err = std::abs(row.lambda_ref - row.lambda_h) / std::abs(row.lambda_ref);
      if (row.rel_err > 0.25) rec.matching_failed = true;
      errs[static_cast<std::size_t>(j)].push_back(row.rel_err);
      rec.rows.push_back(row);
    }
  }
  for (int j = 0; j < nref; ++j) {
    int used = 0;
    rec.slopes.push_back(fit_loglog_slope(rec.h, errs[static_cast<std::size_t>(j)], error_floor, &used));
    rec.fit_points.push_back(used);
  }
  return rec;
}

std::string to_string(BranchLabel b) {
  switch (b) {
    case BranchLabel::Physical: return "physical";
    case BranchLabel::SpuriousLinear: return "spurious-linear";
    case BranchLabel::SpuriousHyperbolic: return "spurious-hyperbolic";
    case BranchLabel::Unclassified: break;
  }
  return "unclassified";
}

namespace {

// Least squares y = a x + b; returns R^2.
double linear_fit(const std::vector<double>& x, const std::vector<double>& y, double& a, double& b) {
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0 || syy == 0) {
    a = 0;
    b = my;
    return 0.0;
  }
  a = sxy / sxx;
  b = my - a * mx;
  double sse = 0;
  for (std::size_t i = 0; i < x.size(); ++i) sse += std::pow(y[i] - (a * x[i] + b), 2);
  return 1.0 - sse / syy;
}

void classify(Branch& br, const std::vector<double>& grid, const ClassifyOptions& opt, std::string_view param) {
  std::vector<double> p, v;
  for (std::size_t i = 0; i < br.values.size(); ++i) {
    const double g = grid[static_cast<std::size_t>(br.start) + i];
    if (g >= opt.range_lo && g <= opt.range_hi) {
      p.push_back(g);
      v.push_back(br.values[i]);
    }
  }
  br.label = BranchLabel::Unclassified;
  br.fit_r2 = 0.0;
  if (static_cast<int>(p.size()) < opt.min_points) return;
  // the branch must cover the whole classification range of the grid
  double glo = 1e300, ghi = -1e300;
  for (double g : grid)
    if (g >= opt.range_lo && g <= opt.range_hi) glo = std::min(glo, g), ghi = std::max(ghi, g);
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  const auto [mn, mx] = std::minmax_element(v.begin(), v.end());
  br.variation = mean != 0 ? (*mx - *mn) / std::abs(mean) : std::numeric_limits<double>::infinity();
  if (p.front() == glo && p.back() == ghi && br.variation < opt.flatness) {
    br.label = BranchLabel::Physical;
    br.fit_r2 = 1.0;
    br.fit_a = 0.0;
    br.fit_b = mean;
    return;
  }
  double a = 0, b = 0;
  const double r2_lin = linear_fit(p, v, a, b);
  double c = 0, d = 0, r2_hyp = -1;
  if (p.front() > 0) {
    std::vector<double> inv(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) inv[i] = 1.0 / p[i];
    r2_hyp = linear_fit(inv, v, c, d);
  }
  // stiffness parameters produce lines, mass parameters hyperbolas; other names may produce either
  const bool lin_ok = param != "beta" && r2_lin >= opt.r2_threshold && a > 0;
  const bool hyp_ok = param != "alpha" && r2_hyp >= opt.r2_threshold && c > 0;
  if (lin_ok && (!hyp_ok || r2_lin >= r2_hyp)) {
    br.label = BranchLabel::SpuriousLinear;
    br.fit_r2 = r2_lin;
    br.fit_a = a;
    br.fit_b = b;
  } else if (hyp_ok) {
    br.label = BranchLabel::SpuriousHyperbolic;
    br.fit_r2 = r2_hyp;
    br.fit_a = c;
    br.fit_b = d;
  }
}

}  // namespace

namespace {

// Minimum-cost assignment of every row to a distinct column (rows <= cols).
std::vector<int> assign_rows(const MatrixXd& cost) {
  const int n = static_cast<int>(cost.rows()), m = static_cast<int>(cost.cols());
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
  std::vector<int> p(m + 1, 0), way(m + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(m + 1, inf);
    std::vector<char> used(m + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) minv[j] = cur, way[j] = j0;
        if (minv[j] < delta) delta = minv[j], j1 = j;
      }
      for (int j = 0; j <= m; ++j) {
        if (used[j]) u[p[j]] += delta, v[j] -= delta;
        else minv[j] -= delta;
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }
  std::vector<int> col(n, -1);
  for (int j = 1; j <= m; ++j)
    if (p[j]) col[p[j] - 1] = j - 1;
  return col;
}

}  // namespace

SweepRecord track_branches(std::string param_name, std::vector<double> grid, std::vector<std::vector<double>> spectra,
                           double window, const ClassifyOptions& classify_opts) {
  if (grid.size() != spectra.size()) throw ConfigError("sweep grid and spectra differ in length");
  if (!std::is_sorted(grid.begin(), grid.end())) throw ConfigError("sweep grid must be sorted");
  SweepRecord rec;
  rec.param_name = std::move(param_name);
  rec.grid = std::move(grid);
  rec.window = window;
  std::size_t K = 0;
  for (auto& s : spectra) {
    std::sort(s.begin(), s.end());
    K = std::max<std::size_t>(K, static_cast<std::size_t>(std::upper_bound(s.begin(), s.end(), window) - s.begin()));
  }
  for (auto& s : spectra)
    if (s.size() > K) s.resize(K);
  rec.spectra = std::move(spectra);

  // beta branches are extrapolated in 1/beta, where the spurious ones are straight
  const bool reciprocal = rec.param_name == "beta" && !rec.grid.empty() && rec.grid.front() > 0;
  auto coord = [&](std::size_t g) { return reciprocal ? 1.0 / rec.grid[g] : rec.grid[g]; };

  const std::size_t G = rec.grid.size();
  rec.branch_of.resize(G);
  std::vector<int> alive;
  for (std::size_t g = 0; g < G; ++g) {
    const auto& s = rec.spectra[g];
    const std::size_t c = static_cast<std::size_t>(std::upper_bound(s.begin(), s.end(), window) - s.begin());
    rec.branch_of[g].assign(s.size(), -1);
    std::vector<double> pred;
    for (int b : alive) {
      const Branch& br = rec.branches[static_cast<std::size_t>(b)];
      const std::size_t n = br.values.size();
      double v = br.values[n - 1];
      if (n >= 2 && g >= 2) {
        const double dx = coord(g - 1) - coord(g - 2);
        if (dx != 0) v += (br.values[n - 1] - br.values[n - 2]) * (coord(g) - coord(g - 1)) / dx;
      }
      pred.push_back(v);
    }
    // a concave cost prefers exact continuations over spreading the mismatch
    std::vector<int> owner(c, -1);
    if (!pred.empty() && c > 0) {
      const bool by_branch = pred.size() <= c;
      MatrixXd cost(static_cast<Eigen::Index>(by_branch ? pred.size() : c),
                    static_cast<Eigen::Index>(by_branch ? c : pred.size()));
      for (std::size_t i = 0; i < pred.size(); ++i)
        for (std::size_t r = 0; r < c; ++r) {
          const double d = std::sqrt(std::abs(pred[i] - s[r]));
          if (by_branch) cost(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(r)) = d;
          else cost(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(i)) = d;
        }
      const std::vector<int> match = assign_rows(cost);
      for (std::size_t i = 0; i < match.size(); ++i) {
        if (by_branch) owner[static_cast<std::size_t>(match[i])] = alive[i];
        else owner[i] = alive[static_cast<std::size_t>(match[i])];
      }
    }
    std::vector<int> next;
    for (std::size_t r = 0; r < c; ++r) {
      int b = owner[r];
      if (b < 0) {
        b = static_cast<int>(rec.branches.size());
        Branch nb;
        nb.start = static_cast<int>(g);
        rec.branches.push_back(nb);
      }
      rec.branches[static_cast<std::size_t>(b)].values.push_back(s[r]);
      rec.branch_of[g][r] = b;
      next.push_back(b);
    }
    alive = std::move(next);
  }
  for (auto& br : rec.branches) classify(br, rec.grid, classify_opts, rec.param_name);
  return rec;
}

SweepRecord run_param_sweep(const AssembledPencil& pencil, std::string_view param, const std::vector<double>& grid,
                            double fixed_other, double window, const ClassifyOptions& classify,
                            const SolveOptions& solve) {
  const bool is_alpha = param == "alpha";
  if (!is_alpha && param != "beta") throw ConfigError("sweep parameter must be alpha or beta");
  std::vector<std::vector<double>> spectra;
  for (double p : grid) {
    const double alpha = is_alpha ? p : fixed_other;
    const double beta = is_alpha ? fixed_other : p;
    const SpectralResult r =
        solve_pencil(MatrixXd(pencil.A(alpha)), MatrixXd(pencil.M(beta)), 0, solve.kernel_tol, false);
    spectra.emplace_back(r.eigenvalues.data(), r.eigenvalues.data() + r.eigenvalues.size());
  }
  return track_branches(std::string(param), grid, std::move(spectra), window, classify);
}

SyntheticPencil make_synthetic_pencil(VectorXd a1, VectorXd a2, VectorXd m1, VectorXd m2, MatrixXd frame) {
  const Eigen::Index n = a1.size();
  if (a2.size() != n || m1.size() != n || m2.size() != n || frame.rows() != n || frame.cols() != n)
    throw ConfigError("synthetic pencil: inconsistent dimensions");
  SyntheticPencil p;
  p.n = static_cast<int>(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (a1(i) < 0 || m1(i) < 0 || a2(i) < 0 || m2(i) < 0)
      throw ConfigError("synthetic pencil: generator diagonals must be nonnegative");
    const bool ka = a1(i) == 0, km = m1(i) == 0;
    if (ka && km) throw ConfigError("synthetic pencil: kernels of A1 and M1 must be disjoint");
    if (ka != (a2(i) > 0)) throw ConfigError("synthetic pencil: A2 must be positive exactly on ker A1");
    if (km != (m2(i) > 0)) throw ConfigError("synthetic pencil: M2 must be positive exactly on ker M1");
    if (ka) p.kerA1_index.push_back(static_cast<int>(i));
    else if (km) p.kerM1_index.push_back(static_cast<int>(i));
    else p.rest_index.push_back(static_cast<int>(i));
  }
  p.dim_kerA1 = static_cast<int>(p.kerA1_index.size());
  p.dim_kerM1 = static_cast<int>(p.kerM1_index.size());
  auto rotate = [&frame](const VectorXd& d) {
    MatrixXd S = frame * d.asDiagonal() * frame.transpose();
    return MatrixXd(0.5 * (S + S.transpose()));
  };
  p.A1 = rotate(a1);
  p.A2 = rotate(a2);
  p.M1 = rotate(m1);
  p.M2 = rotate(m2);
  p.mu.resize(p.dim_kerA1);
  for (int i = 0; i < p.dim_kerA1; ++i) p.mu(i) = a2(p.kerA1_index[i]) / m1(p.kerA1_index[i]);
  p.omega.resize(p.dim_kerM1);
  for (int i = 0; i < p.dim_kerM1; ++i) p.omega(i) = m2(p.kerM1_index[i]) / a1(p.kerM1_index[i]);
  p.a1 = std::move(a1);
  p.a2 = std::move(a2);
  p.m1 = std::move(m1);
  p.m2 = std::move(m2);
  p.frame = std::move(frame);
  return p;
}

SyntheticPencil build_synthetic_pencil(int n, int dim_kerA1, int dim_kerM1, std::uint64_t rng_seed, bool rotate) {
  if (n < 1 || dim_kerA1 < 0 || dim_kerM1 < 0 || dim_kerA1 + dim_kerM1 > n)
    throw ConfigError("synthetic pencil: need 0 <= dim_kerA1 + dim_kerM1 <= n");
  std::mt19937_64 rng(rng_seed);
  std::uniform_real_distribution<double> U(0.5, 4.0);
  VectorXd a1(n), a2 = VectorXd::Zero(n), m1(n), m2 = VectorXd::Zero(n);
  for (int i = 0; i < n; ++i) {
    a1(i) = U(rng);
    m1(i) = U(rng);
  }
  for (int i = 0; i < dim_kerA1; ++i) {
    a1(i) = 0;
    a2(i) = U(rng);
  }
  for (int i = dim_kerA1; i < dim_kerA1 + dim_kerM1; ++i) {
    m1(i) = 0;
    m2(i) = U(rng);
  }
  MatrixXd Q = MatrixXd::Identity(n, n);
  if (rotate) {
    std::normal_distribution<double> N01;
    MatrixXd B(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) B(i, j) = N01(rng);
    Q = Eigen::HouseholderQR<MatrixXd>(B).householderQ();
  }
  SyntheticPencil p = make_synthetic_pencil(a1, a2, m1, m2, Q);
  check_synthetic_assumptions(p);
  return p;
}

void check_synthetic_assumptions(const SyntheticPencil& p, double tol) {
  auto fail = [](const std::string& what) { throw NumericalError("synthetic pencil assumption failed: " + what); };
  const MatrixXd& Q = p.frame;
  if ((Q.transpose() * Q - MatrixXd::Identity(p.n, p.n)).cwiseAbs().maxCoeff() > tol * p.n) fail("frame not orthogonal");
  auto scale = [](const MatrixXd& S) { return std::max(1.0, S.cwiseAbs().maxCoeff()); };
  // i) A1, M1 positive semidefinite
  if (p.n > 0 && symmetric_eigenvalues(p.A1)(0) < -tol * scale(p.A1) * p.n) fail("A1 not semidefinite");
  if (p.n > 0 && symmetric_eigenvalues(p.M1)(0) < -tol * scale(p.M1) * p.n) fail("M1 not semidefinite");
  auto columns = [&Q](const std::vector<int>& idx) {
    MatrixXd B(Q.rows(), static_cast<Eigen::Index>(idx.size()));
    for (std::size_t i = 0; i < idx.size(); ++i) B.col(static_cast<Eigen::Index>(i)) = Q.col(idx[i]);
    return B;
  };
  std::vector<int> notA, notM;
  for (int i = 0; i < p.n; ++i) {
    if (std::find(p.kerA1_index.begin(), p.kerA1_index.end(), i) == p.kerA1_index.end()) notA.push_back(i);
    if (std::find(p.kerM1_index.begin(), p.kerM1_index.end(), i) == p.kerM1_index.end()) notM.push_back(i);
  }
  const MatrixXd KA = columns(p.kerA1_index), RA = columns(notA);
  const MatrixXd KM = columns(p.kerM1_index), RM = columns(notM);
  // kernels really are kernels
  if (KA.cols() && (p.A1 * KA).cwiseAbs().maxCoeff() > tol * scale(p.A1) * p.n) fail("ker A1");
  if (KM.cols() && (p.M1 * KM).cwiseAbs().maxCoeff() > tol * scale(p.M1) * p.n) fail("ker M1");
  // ii) A2 positive definite on ker A1, zero on its complement
  if (KA.cols() && symmetric_eigenvalues(KA.transpose() * p.A2 * KA)(0) <= tol * scale(p.A2)) fail("A2 on ker A1");
  if (RA.cols() && (p.A2 * RA).cwiseAbs().maxCoeff() > tol * scale(p.A2) * p.n) fail("A2 off ker A1");
  // iii) M2 positive definite on ker M1, zero on its complement
  if (KM.cols() && symmetric_eigenvalues(KM.transpose() * p.M2 * KM)(0) <= tol * scale(p.M2)) fail("M2 on ker M1");
  if (RM.cols() && (p.M2 * RM).cwiseAbs().maxCoeff() > tol * scale(p.M2) * p.n) fail("M2 off ker M1");
}

std::vector<double> predict_families(const SyntheticPencil& p, double alpha, double beta) {
  auto columns = [&p](const std::vector<int>& idx) {
    MatrixXd B(p.n, static_cast<Eigen::Index>(idx.size()));
    for (std::size_t i = 0; i < idx.size(); ++i) B.col(static_cast<Eigen::Index>(i)) = p.frame.col(idx[i]);
    return B;
  };
  const MatrixXd A = p.A1 + alpha * p.A2;
  const MatrixXd M = p.M1 + beta * p.M2;
  std::vector<double> out;
  auto append = [&out](const VectorXd& v) { out.insert(out.end(), v.data(), v.data() + v.size()); };
  // first family: A1 v = lambda M v away from both kernels
  if (!p.rest_index.empty()) {
    const MatrixXd R = columns(p.rest_index);
    append(solve_spd(R.transpose() * p.A1 * R, R.transpose() * M * R, 0, false).eigenvalues);
  }
  // alpha-family: lambda = alpha mu with A2 w = mu M w on ker A1
  if (!p.kerA1_index.empty()) {
    const MatrixXd K = columns(p.kerA1_index);
    append(alpha * solve_spd(K.transpose() * p.A2 * K, K.transpose() * M * K, 0, false).eigenvalues);
  }
  // beta-family through the reciprocal problem M2 w = omega A w on ker M1: lambda = 1 / (beta omega)
  if (!p.kerM1_index.empty() && beta > 0) {
    const MatrixXd K = columns(p.kerM1_index);
    const VectorXd omega = solve_spd(K.transpose() * p.M2 * K, K.transpose() * A * K, 0, false).eigenvalues;
    append((beta * omega).cwiseInverse());
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<KernelRow> kernel_table(const std::vector<PolygonalMesh>& family, const std::vector<int>& ks,
                                    BoundaryCondition bc, double kernel_tol) {
  std::vector<KernelRow> rows;
  for (int k : ks)
    for (const auto& mesh : family) {
      const DofMap dofs = build_dof_map(mesh, SpaceKind::Conforming, k, bc);
      const AssembledPencil P = assemble_pencil(mesh, dofs);
      KernelRow r;
      r.k = k;
      r.mesh_id = mesh_id(mesh);
      r.N_cells = mesh.num_cells();
      r.ker_A1 = kernel_dim(MatrixXd(P.A1), kernel_tol);
      r.ker_M1 = kernel_dim(MatrixXd(P.M1), kernel_tol);
      rows.push_back(r);
    }
  return rows;
}

std::vector<PencilEigenRow> pencil_eigenvalue_table(const std::vector<PolygonalMesh>& family, int k,
                                                    BoundaryCondition bc, double kernel_tol) {
  std::vector<PencilEigenRow> rows;
  for (const auto& mesh : family) {
    const DofMap dofs = build_dof_map(mesh, SpaceKind::Conforming, k, bc);
    const AssembledPencil P = assemble_pencil(mesh, dofs);
    rows.push_back({mesh_id(mesh), mesh.num_cells(), smallest_pencil_eigenvalue(MatrixXd(P.A1), MatrixXd(P.M1), kernel_tol)});
  }
  return rows;
}

namespace {

std::vector<double> neumann_lshape_spectrum(const std::string& spec, int k, int n_lowest, double& h_eff) {
  const PolygonalMesh mesh = make_mesh(Domain::lshape(), spec);
  h_eff = nominal_h(mesh);
  const DofMap dofs = build_dof_map(mesh, SpaceKind::Conforming, k, BoundaryCondition::Neumann);
  const AssembledPencil P = assemble_pencil(mesh, dofs);
  const SpectralResult r = solve_lowest(P, 1.0, 1.0, n_lowest + 1);
  return std::vector<double>(r.eigenvalues.data() + 1, r.eigenvalues.data() + r.eigenvalues.size());
}

}  // namespace

ExtrapolatedReference extrapolate_spectra(std::vector<std::vector<double>> inputs, std::vector<double> h_eff) {
  if (inputs.size() != 3 || h_eff.size() != 3) throw ConfigError("extrapolation needs exactly three meshes");
  if (!(h_eff[0] > h_eff[1] && h_eff[1] > h_eff[2])) throw ConfigError("extrapolation meshes must be refining");
  const std::size_t n = std::min({inputs[0].size(), inputs[1].size(), inputs[2].size()});
  ExtrapolatedReference ref;
  ref.inputs = std::move(inputs);
  ref.h_eff = std::move(h_eff);
  for (std::size_t j = 0; j < n; ++j) {
    const double d1 = ref.inputs[1][j] - ref.inputs[0][j], d2 = ref.inputs[2][j] - ref.inputs[1][j];
    if (!(d1 * d2 > 0 && std::abs(d2) < std::abs(d1))) {
      ref.extrapolated = false;
      ref.warning = "non-monotone error sequence for eigenvalue " + std::to_string(j + 1) +
                    "; returning the finest-mesh values";
      break;
    }
  }
  for (std::size_t j = 0; j < n; ++j) {
    const double l1 = ref.inputs[0][j], l2 = ref.inputs[1][j], l3 = ref.inputs[2][j];
    if (!ref.extrapolated) {
      ref.values.push_back(l3);
      continue;
    }
    // observed order p from lambda_i = lambda + C h_i^p, solved by bisection for general ratios
    const double target = (l1 - l2) / (l2 - l3);
    auto g = [&](double p) {
      return (std::pow(ref.h_eff[0], p) - std::pow(ref.h_eff[1], p)) /
                 (std::pow(ref.h_eff[1], p) - std::pow(ref.h_eff[2], p)) - target;
    };
    double lo = 1e-3, hi = 50.0;
    if (g(lo) > 0 || g(hi) < 0) {
      ref.extrapolated = false;
      ref.warning = "no observed order for eigenvalue " + std::to_string(j + 1) + "; returning the finest-mesh values";
      ref.values.assign(ref.inputs[2].begin(), ref.inputs[2].begin() + static_cast<std::ptrdiff_t>(n));
      break;
    }
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      (g(mid) < 0 ? lo : hi) = mid;
    }
    const double p = 0.5 * (lo + hi);
    const double C = (l2 - l3) / (std::pow(ref.h_eff[1], p) - std::pow(ref.h_eff[2], p));
    ref.values.push_back(l3 - C * std::pow(ref.h_eff[2], p));
  }
  return ref;
}

ExtrapolatedReference lshape_reference_eigenvalues(int n_lowest, const LshapeReferenceOptions& options) {
  if (options.meshes.size() != 3) throw ConfigError("extrapolation needs exactly three meshes");
  if (options.cache && std::filesystem::exists(*options.cache)) {
    const auto j = nlohmann::json::parse(read_file(*options.cache));
    ExtrapolatedReference ref;
    if (j.at("meshes").get<std::vector<std::string>>() == options.meshes && j.at("k").get<int>() == options.k &&
        static_cast<int>(j.at("values").size()) >= n_lowest) {
      ref.values = j.at("values").get<std::vector<double>>();
      ref.values.resize(static_cast<std::size_t>(n_lowest));
      ref.inputs = j.at("inputs").get<std::vector<std::vector<double>>>();
      ref.h_eff = j.at("h_eff").get<std::vector<double>>();
      ref.meshes = options.meshes;
      ref.extrapolated = j.at("extrapolated").get<bool>();
      ref.warning = j.value("warning", "");
      return ref;
    }
  }
  std::vector<std::vector<double>> inputs;
  std::vector<double> h_eff;
  for (const auto& spec : options.meshes) {
    double h = 0;
    inputs.push_back(neumann_lshape_spectrum(spec, options.k, n_lowest, h));
    h_eff.push_back(h);
  }
  ExtrapolatedReference ref = extrapolate_spectra(std::move(inputs), std::move(h_eff));
  ref.meshes = options.meshes;
  if (!ref.extrapolated) std::cerr << "warning: " << ref.warning << '\n';
  if (options.cache) {
    nlohmann::json j;
    j["meshes"] = options.meshes;
    j["k"] = options.k;
    j["values"] = ref.values;
    j["inputs"] = ref.inputs;
    j["h_eff"] = ref.h_eff;
    j["extrapolated"] = ref.extrapolated;
    j["warning"] = ref.warning;
    write_file_atomic(*options.cache, j.dump(2) + "\n");
  }
  return ref;
}

std::string convergence_csv(const ConvergenceRecord& rec) {
  std::ostringstream out;
  out << "mesh_id,h,N_h,eig_index,lambda_ref,lambda_h,rel_err\n";
  for (const auto& r : rec.rows)
    out << r.mesh_id << ',' << format_double(r.h) << ',' << r.N_h << ',' << r.eig_index << ','
        << format_double(r.lambda_ref) << ',' << format_double(r.lambda_h) << ',' << format_double(r.rel_err) << '\n';
  return out.str();
}

std::string sweep_csv(const SweepRecord& rec) {
  std::ostringstream out;
  out << "param_name,param_value,eig_rank,lambda,branch_label,fit_r2\n";
  for (std::size_t g = 0; g < rec.grid.size(); ++g)
    for (std::size_t r = 0; r < rec.spectra[g].size(); ++r) {
      const int b = rec.branch_of[g][r];
      const Branch* br = b >= 0 ? &rec.branches[static_cast<std::size_t>(b)] : nullptr;
      out << rec.param_name << ',' << format_double(rec.grid[g]) << ',' << r + 1 << ','
          << format_double(rec.spectra[g][r]) << ',' << to_string(br ? br->label : BranchLabel::Unclassified) << ','
          << format_double(br ? br->fit_r2 : 0.0) << '\n';
    }
  return out.str();
}

std::string kernel_csv(const std::vector<KernelRow>& rows) {
  std::ostringstream out;
  out << "k,mesh_id,N_cells,ker_A1,ker_M1\n";
  for (const auto& r : rows) out << r.k << ',' << r.mesh_id << ',' << r.N_cells << ',' << r.ker_A1 << ',' << r.ker_M1 << '\n';
  return out.str();
}

std::string pencil_eigen_csv(const std::vector<PencilEigenRow>& rows) {
  std::ostringstream out;
  out << "mesh_id,N_cells,lambda_min\n";
  for (const auto& r : rows) out << r.mesh_id << ',' << r.N_cells << ',' << format_double(r.lambda_min) << '\n';
  return out.str();
}

void write_convergence_csv(const ConvergenceRecord& rec, const std::filesystem::path& path) {
  write_file_atomic(path, convergence_csv(rec));
}
void write_sweep_csv(const SweepRecord& rec, const std::filesystem::path& path) { write_file_atomic(path, sweep_csv(rec)); }
void write_kernel_csv(const std::vector<KernelRow>& rows, const std::filesystem::path& path) {
  write_file_atomic(path, kernel_csv(rows));
}
void write_pencil_eigen_csv(const std::vector<PencilEigenRow>& rows, const std::filesystem::path& path) {
  write_file_atomic(path, pencil_eigen_csv(rows));
}

}  // namespace vemeig
