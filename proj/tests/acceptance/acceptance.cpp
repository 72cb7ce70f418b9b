// Acceptance run: one PASS/FAIL line per criterion. The exit status is the
// number of failed criteria.

#include "vemeig/studies.hpp"

#include "../oracles.hpp"

#include <Eigen/SparseCholesky>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace vemeig;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

constexpr double pi = std::numbers::pi;

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(double x, int digits = 3) {
  std::ostringstream s;
  s.precision(digits);
  s << x;
  return s.str();
}

std::string join(const std::vector<double>& v, int digits = 3) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + fmt(v[i], digits);
  return "[" + s + "]";
}

bool within(double x, double lo, double hi) { return x >= lo && x <= hi; }

// Square meshes with n^2 Voronoi cells, h = pi/n, n = 8, 16, 32, 64.
const std::vector<PolygonalMesh>& square_family() {
  static const std::vector<PolygonalMesh> fam = [] {
    std::vector<PolygonalMesh> f;
    for (int n : {8, 16, 32, 64}) f.push_back(make_mesh(Domain::square(), "voronoi:" + std::to_string(n * n) + ":1"));
    return f;
  }();
  return fam;
}

// Five-mesh family used for the kernel tables.
const std::vector<PolygonalMesh>& table_family() {
  static const std::vector<PolygonalMesh> fam = [] {
    std::vector<PolygonalMesh> f;
    for (int n : {50, 100, 200, 400, 800}) f.push_back(make_mesh(Domain::square(), "voronoi:" + std::to_string(n) + ":1"));
    return f;
  }();
  return fam;
}

std::vector<PolygonalMesh> lshape_family() {
  std::vector<PolygonalMesh> f;
  for (int n : {8, 16, 32, 64}) f.push_back(make_mesh(Domain::lshape(), "voronoi:" + std::to_string(3 * n * n) + ":1"));
  return f;
}

ConvergenceRecord square_study(int k, MassStab stab_b = MassStab::Dofi) {
  static std::map<std::pair<int, int>, ConvergenceRecord> cache;
  const auto key = std::make_pair(k, static_cast<int>(stab_b));
  if (auto it = cache.find(key); it != cache.end()) return it->second;
  ProblemSetup s;
  s.k = k;
  s.assembly.stab_b = stab_b;
  return cache[key] = run_convergence(s, square_family(), exact_square_spectrum(6));
}

std::vector<double> errors_of(const ConvergenceRecord& rec, int j) {
  std::vector<double> e;
  for (std::size_t m = 0; m < rec.h.size(); ++m) e.push_back(rec.error(static_cast<int>(m), j));
  return e;
}

Verdict criterion1() {
  const auto rec = square_study(1);
  const auto e = errors_of(rec, 1);
  bool monotone = true;
  for (std::size_t m = 1; m < e.size(); ++m) monotone = monotone && e[m] < e[m - 1];
  const double slope = rec.slopes[0];
  const double paper_finest = 1.662e-4;
  const bool factor3 = within(e.back(), paper_finest / 3, paper_finest * 3);
  return {monotone && within(slope, 1.7, 2.3) && factor3,
          "k=1 lambda1 errors " + join(e) + ", slope " + fmt(slope) + ", finest/1.662e-4 = " +
              fmt(e.back() / paper_finest)};
}

Verdict criterion2() {
  bool ok = true;
  std::string detail;
  for (int k : {2, 3}) {
    const auto rec = square_study(k);
    std::vector<double> slopes;
    // ranks of the distinct eigenvalues 2, 5, 8, 10 in {2,5,5,8,10,10}
    for (int j : {1, 2, 4, 5}) {
      const double s = rec.slopes[static_cast<std::size_t>(j - 1)];
      slopes.push_back(s);
      ok = ok && rec.fit_points[static_cast<std::size_t>(j - 1)] >= 2 && within(s, 2 * k - 0.4, 2 * k + 0.4);
    }
    detail += "k=" + std::to_string(k) + " slopes for {2,5,8,10} " + join(slopes) + " (target " +
              std::to_string(2 * k) + "+-0.4); ";
  }
  return {ok, detail};
}

Verdict criterion3() {
  const auto e = errors_of(square_study(4), 1);
  std::size_t first = e.size();
  for (std::size_t m = 0; m < e.size(); ++m)
    if (e[m] <= 1e-9) {
      first = m;
      break;
    }
  bool plateau = first < e.size();
  for (std::size_t m = first; m < e.size(); ++m) plateau = plateau && e[m] <= 1e-8;
  return {plateau, "k=4 lambda1 errors " + join(e) + " (reaches 1e-9, stays below 1e-8 afterwards)"};
}

Verdict criterion4() {
  // pairs where both errors sit at the roundoff floor count as equal in magnitude
  constexpr double noise = 1e-9;
  bool ok = true;
  std::string detail;
  for (int k : {1, 4}) {
    const auto stab = square_study(k, MassStab::Dofi);
    const auto none = square_study(k, MassStab::None);
    double lo = 1e300, hi = 0;
    int floor_pairs = 0;
    for (int j = 1; j <= 6; ++j)
      for (std::size_t m = 0; m < stab.h.size(); ++m) {
        const double a = stab.error(static_cast<int>(m), j), b = none.error(static_cast<int>(m), j);
        if (a <= noise && b <= noise) {
          ++floor_pairs;
          continue;
        }
        const double r = b / a;
        lo = std::min(lo, r);
        hi = std::max(hi, r);
        ok = ok && within(r, 0.5, 2.0);
      }
    detail += "k=" + std::to_string(k) + " ratio none/stabilized in [" + fmt(lo) + ", " + fmt(hi) + "], " +
              std::to_string(floor_pairs) + " pairs at the 1e-9 floor; ";
  }
  return {ok, detail};
}

Verdict criterion5(const std::filesystem::path& cache) {
  const auto ref = lshape_reference_eigenvalues(6, {.cache = cache});
  ProblemSetup s;
  s.domain = Domain::lshape();
  s.bc = BoundaryCondition::Neumann;
  s.k = 1;
  const auto rec = run_convergence(s, lshape_family(), ref.values);
  const double s1 = rec.slopes[0], s3 = rec.slopes[2];
  return {ref.extrapolated && within(s1, 4.0 / 3 - 0.3, 4.0 / 3 + 0.3) && within(s3, 1.7, 2.3),
          "reference " + join(ref.values, 8) + ", lambda1 errors " + join(errors_of(rec, 1)) + " slope " + fmt(s1) +
              ", lambda3 errors " + join(errors_of(rec, 3)) + " slope " + fmt(s3)};
}

Verdict criterion6() {
  const auto rows = kernel_table(table_family(), {1, 2, 3});
  bool ok = true;
  std::string detail;
  const auto& fam = table_family();
  for (int k : {1, 2, 3}) {
    std::vector<double> ka, km;
    for (std::size_t m = 0; m < fam.size(); ++m) {
      const auto& r = rows[static_cast<std::size_t>(k - 1) * fam.size() + m];
      ka.push_back(r.ker_A1);
      km.push_back(r.ker_M1);
      if (k == 1) ok = ok && r.ker_A1 == 0 && r.ker_M1 == 0;
      if (k == 2) {
        const bool polygons = validate_mesh(fam[m]).max_vertices_per_cell > 3;
        ok = ok && r.ker_M1 == 0 && (!polygons || r.ker_A1 > 0);
      }
      if (k == 3 && m + 2 >= fam.size()) ok = ok && r.ker_M1 > 0;
    }
    detail += "k=" + std::to_string(k) + " kerA1 " + join(ka, 6) + " kerM1 " + join(km, 6) + "; ";
  }
  return {ok, detail};
}

Verdict criterion7() {
  // k=1 is the order at which both A1 and M1 are nonsingular
  const auto rows = pencil_eigenvalue_table(table_family(), 1);
  std::vector<double> v;
  bool ok = true;
  for (const auto& r : rows) {
    if (!v.empty()) ok = ok && r.lambda_min < v.back();
    v.push_back(r.lambda_min);
  }
  return {ok, "k=1 smallest eigenvalue of (A1, M1) on N=50,100,200,400,800: " + join(v, 6)};
}

const AssembledPencil& sweep_pencil() {
  static const AssembledPencil P = [] {
    const auto mesh = make_mesh(Domain::square(), "voronoi:200:1");
    return assemble_pencil(mesh, build_dof_map(mesh, SpaceKind::Conforming, 3, BoundaryCondition::Dirichlet));
  }();
  return P;
}

// Values of a branch at the grid points with lo <= grid <= hi, empty unless it covers all of them.
std::vector<double> branch_on(const Branch& b, const std::vector<double>& grid, double lo, double hi) {
  std::vector<double> v;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    if (grid[g] < lo || grid[g] > hi) continue;
    const int i = static_cast<int>(g) - b.start;
    if (i < 0 || i >= static_cast<int>(b.values.size())) return {};
    v.push_back(b.values[static_cast<std::size_t>(i)]);
  }
  return v;
}

double spread(const std::vector<double>& v) {
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  double mean = 0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  return (*hi - *lo) / std::abs(mean);
}

Verdict criterion8() {
  std::vector<double> grid;
  for (int i = 0; i <= 20; ++i) grid.push_back(0.025 * i);
  for (int a = 1; a <= 10; ++a) grid.push_back(a);
  const auto rec = run_param_sweep(sweep_pencil(), "alpha", grid, 1.0, 40.0);
  int linear = 0;
  double best_r2 = 0, best_a = 0;
  for (const auto& b : rec.branches)
    if (b.label == BranchLabel::SpuriousLinear && b.fit_r2 > 0.99 && b.fit_a > 0) {
      ++linear;
      if (b.fit_r2 > best_r2) best_r2 = b.fit_r2, best_a = b.fit_a;
    }
  // branches present on all of [1, 10]
  std::vector<double> firsts;
  double worst = 0;
  for (const auto& b : rec.branches) {
    const auto v = branch_on(b, rec.grid, 1.0, 10.0);
    if (v.empty()) continue;
    firsts.push_back(v.front());
    worst = std::max(worst, spread(v));
  }
  std::sort(firsts.begin(), firsts.end());
  const std::vector<double> expect{2, 5, 5, 8};
  bool lowest = firsts.size() >= 4;
  for (std::size_t i = 0; lowest && i < 4; ++i) lowest = std::abs(firsts[i] - expect[i]) <= 0.05 * expect[i];
  return {linear >= 1 && lowest && worst < 0.01,
          std::to_string(firsts.size()) + " branches on alpha in [1,10], lowest " +
              join(std::vector<double>(firsts.begin(), firsts.begin() + std::min<std::size_t>(4, firsts.size()))) +
              ", max variation " + fmt(worst) + "; " + std::to_string(linear) +
              " linear spurious branches, best R^2 " + fmt(best_r2, 6) + " slope " + fmt(best_a)};
}

Verdict criterion9() {
  std::vector<double> grid;
  for (int i = 1; i <= 20; ++i) grid.push_back(0.25 * i);
  const auto rec = run_param_sweep(sweep_pencil(), "beta", grid, 10.0, std::numeric_limits<double>::infinity());
  int hyper = 0;
  double best_r2 = 0, best_c = 0;
  for (const auto& b : rec.branches)
    if (b.label == BranchLabel::SpuriousHyperbolic && b.fit_r2 > 0.99 && b.fit_a > 0) {
      ++hyper;
      if (b.fit_r2 > best_r2) best_r2 = b.fit_r2, best_c = b.fit_a;
    }
  // branches below 40 over the whole grid hold the physical eigenvalues
  int physical = 0;
  double worst = 0;
  bool labelled = true;
  for (const auto& b : rec.branches) {
    const auto v = branch_on(b, rec.grid, grid.front(), grid.back());
    if (v.empty() || *std::max_element(v.begin(), v.end()) > 40.0) continue;
    ++physical;
    worst = std::max(worst, spread(v));
    labelled = labelled && b.label == BranchLabel::Physical;
  }
  return {hyper >= 1 && physical >= 4 && worst < 0.01 && labelled,
          std::to_string(hyper) + " hyperbolic spurious branches, best R^2 " + fmt(best_r2, 6) + " c " + fmt(best_c) +
              "; " + std::to_string(physical) + " branches below 40, max variation " + fmt(worst)};
}

Verdict criterion10() {
  std::mt19937_64 rng(10);
  std::uniform_int_distribution<int> size(6, 40);
  std::uniform_real_distribution<double> par(0.01, 10.0);
  double worst = 0;
  bool counts = true;
  for (int t = 0; t < 50; ++t) {
    const int n = size(rng);
    const int kA = std::uniform_int_distribution<int>(0, n / 2)(rng);
    const int kM = std::uniform_int_distribution<int>(0, n - kA - 1)(rng);
    const SyntheticPencil p = build_synthetic_pencil(n, kA, kM, 1000 + static_cast<std::uint64_t>(t));
    check_synthetic_assumptions(p);
    for (int s = 0; s < 5; ++s) {
      const double alpha = par(rng), beta = par(rng);
      const VectorXd got = solve_pencil(p.A1 + alpha * p.A2, p.M1 + beta * p.M2, 0, kDefaultKernelTol, false).eigenvalues;
      const auto expect = predict_families(p, alpha, beta);
      if (static_cast<std::size_t>(got.size()) != expect.size()) {
        counts = false;
        continue;
      }
      for (std::size_t i = 0; i < expect.size(); ++i)
        worst = std::max(worst, std::abs(got(static_cast<Eigen::Index>(i)) - expect[i]) / std::abs(expect[i]));
    }
  }
  return {counts && worst <= 1e-10, "250 pencil solves, max relative deviation " + fmt(worst)};
}

Verdict criterion11() {
  std::vector<PolygonalMesh> meshes = square_family();
  for (const auto& m : table_family()) meshes.push_back(m);
  for (auto& m : lshape_family()) meshes.push_back(std::move(m));
  meshes.push_back(make_mesh(Domain::square(), "cartesian:8"));
  meshes.push_back(make_mesh(Domain::lshape(), "cartesian:8"));
  meshes.push_back(make_mesh(Domain::square(), "triangle:8"));
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> U(-1, 1);
  double reproduction = 0, consistency = 0, assembled = 0;
  long checks = 0;
  for (const auto& mesh : meshes)
    for (int c = 0; c < mesh.num_cells(); ++c) {
      const CellGeometry cell = mesh.cell_geometry(c);
      for (auto space : {SpaceKind::Conforming, SpaceKind::Nonconforming})
        for (int k = 1; k <= 4; ++k) {
          LocalElement el(cell, space, k);
          const auto& P = el.projectors();
          const int dim = el.basis().size();
          const MatrixXd I = MatrixXd::Identity(dim, dim);
          reproduction = std::max({reproduction, (P.pinabla_coeff * el.monomial_dofs() - I).cwiseAbs().maxCoeff(),
                                   (P.pi0_coeff * el.monomial_dofs() - I).cwiseAbs().maxCoeff()});
          VectorXd v(el.num_dofs()), pc(dim);
          for (auto& x : v) x = U(rng);
          for (auto& x : pc) x = U(rng);
          const double exact = oracles::energy_oracle(el, v, pc);
          // a_h(v, p) = a(Pi v, p) + S((I - Pi) v, (I - Pi) p) with (I - Pi) p = 0
          const double projected = (P.pinabla_coeff * v).dot(el.stiffness_gram() * pc);
          consistency = std::max(consistency, std::abs(projected - exact) / (1.0 + std::abs(exact)));
          // the same form through the assembled local matrix, relative to its rounding scale
          const auto L = el.matrices(StiffnessStab::Dofi, MassStab::Dofi);
          const MatrixXd K = L.stiffness(L.alpha_P);
          const VectorXd dp = el.interpolate_polynomial(pc);
          const double scale = 1.0 + std::abs(exact) + v.cwiseAbs().dot(K.cwiseAbs() * dp.cwiseAbs());
          assembled = std::max(assembled, std::abs(v.dot(K * dp) - exact) / scale);
          ++checks;
        }
    }
  return {reproduction <= 1e-10 && consistency <= 1e-10 && assembled <= 1e-13,
          std::to_string(meshes.size()) + " meshes, " + std::to_string(checks) +
              " local elements: reproduction " + fmt(reproduction) + ", consistency " + fmt(consistency) +
              ", assembled-matrix form " + fmt(assembled) + " of its rounding scale"};
}

Verdict criterion12() {
  const auto mesh = make_mesh(Domain::square(), "triangle:8");
  double p1 = 0, cr = 0;
  for (auto bc : {BoundaryCondition::Dirichlet, BoundaryCondition::Neumann}) {
    const auto d = build_dof_map(mesh, SpaceKind::Conforming, 1, bc);
    p1 = std::max(p1, (MatrixXd(assemble_pencil(mesh, d).A(1.0)) - oracles::p1_stiffness_oracle(mesh, d))
                          .cwiseAbs()
                          .maxCoeff());
    const auto dn = build_dof_map(mesh, SpaceKind::Nonconforming, 1, bc);
    cr = std::max(cr, (MatrixXd(assemble_pencil(mesh, dn).A(1.0)) - oracles::cr_stiffness_oracle(mesh, dn))
                          .cwiseAbs()
                          .maxCoeff());
  }
  return {p1 <= 1e-12 && cr <= 1e-12, "max entry difference P1 " + fmt(p1) + ", Crouzeix-Raviart " + fmt(cr)};
}

Verdict criterion13() {
  auto u = [](const Point& p) { return p.x() * (pi - p.x()) * p.y() * (pi - p.y()); };
  auto f = [](const Point& p) { return 2 * p.y() * (pi - p.y()) + 2 * p.x() * (pi - p.x()); };
  bool ok = true;
  std::string detail;
  for (const char* spec : {"cartesian:8", "voronoi:200:1"}) {
    const auto mesh = make_mesh(Domain::square(), spec);
    const auto d = build_dof_map(mesh, SpaceKind::Conforming, 4, BoundaryCondition::Dirichlet);
    const auto P = assemble_pencil(mesh, d);
    Eigen::SimplicialLDLT<SparseMatrix> ldlt(P.A(1.0));
    const VectorXd x = ldlt.solve(assemble_load(mesh, d, f));
    const double err = (x - d.restrict_free(interpolate(mesh, d, u))).cwiseAbs().maxCoeff();
    ok = ok && ldlt.info() == Eigen::Success && err <= 1e-8;
    detail += std::string(spec) + " max DOF error " + fmt(err) + "; ";
  }
  return {ok, detail};
}

Verdict criterion14() {
  const auto mesh = make_mesh(Domain::square(), "voronoi:800:1");
  const auto d = build_dof_map(mesh, SpaceKind::Conforming, 3, BoundaryCondition::Dirichlet);
  const auto P = assemble_pencil(mesh, d);
  const auto res = solve_lowest(P, 1.0, 0.0, 6, {.count_infinite = true});
  const int kerM1 = kernel_dim(MatrixXd(P.M1));
  const std::vector<double> expect{2, 5, 5, 8};
  bool ok = res.eigenvalues.size() >= 4 && res.num_infinite == kerM1;
  std::vector<double> got;
  for (Eigen::Index i = 0; i < std::min<Eigen::Index>(4, res.eigenvalues.size()); ++i) {
    got.push_back(res.eigenvalues(i));
    ok = ok && std::abs(res.eigenvalues(i) - expect[static_cast<std::size_t>(i)]) <= 0.05 * expect[static_cast<std::size_t>(i)];
  }
  return {ok, "n=" + std::to_string(P.size()) + ", infinite eigenvalues " + std::to_string(res.num_infinite) +
                  ", dim ker M1 " + std::to_string(kerM1) + ", lowest " + join(got, 6)};
}

}  // namespace

int main(int argc, char** argv) {
  const std::filesystem::path cache = argc > 1 ? argv[1] : "lshape_reference.json";
  const std::vector<std::function<Verdict()>> criteria{
      criterion1, criterion2,  criterion3,  criterion4,  [&] { return criterion5(cache); },
      criterion6, criterion7,  criterion8,  criterion9,  criterion10,
      criterion11, criterion12, criterion13, criterion14};
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = criteria[i]();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failed += v.pass ? 0 : 1;
    std::cout << (v.pass ? "PASS" : "FAIL") << " criterion " << i + 1 << ": " << v.detail << " (" << fmt(secs, 3)
              << " s)" << std::endl;
  }
  std::cout << criteria.size() - static_cast<std::size_t>(failed) << "/" << criteria.size() << " criteria passed"
            << std::endl;
  return failed;
}
