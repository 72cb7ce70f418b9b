// vemeig: mesh generation, eigenvalue solves, convergence studies, parameter
// sweeps and kernel tables from the command line.

#include "vemeig/io.hpp"
#include "vemeig/studies.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace vemeig;

namespace {

struct RunConfig {
  std::string command;
  std::string domain = "square";
  std::string bc = "dirichlet";
  std::string space = "conf";
  int k = 1;
  std::vector<std::string> meshes{"voronoi:200"};
  double alpha = 1.0;
  double beta = 1.0;
  std::string stab_a = "dofi";
  std::string stab_b = "dofi";
  std::string param_mode = "recipe";
  int n_eig = 6;
  double kernel_tol = kDefaultKernelTol;
  int dense_limit = 1500;
  bool count_infinite = false;
  double window = 40.0;
  std::string out = "out";
  std::uint64_t seed = 1;
  int eigenfunctions = 0;
  bool export_matrices = false;
  double error_floor = 1e-11;
  std::string sweep_param = "alpha";
  std::vector<double> grid;
  std::vector<int> ks{1, 2, 3};
  int pencil_k = 1;
  std::string reference_cache;
  // classification range of sweep branches (whole grid by default)
  std::optional<double> classify_lo, classify_hi;
};

void to_json(json& j, const RunConfig& c) {
  j = json{{"command", c.command},     {"domain", c.domain},       {"bc", c.bc},
           {"space", c.space},         {"k", c.k},                 {"meshes", c.meshes},
           {"alpha", c.alpha},         {"beta", c.beta},           {"stab_a", c.stab_a},
           {"stab_b", c.stab_b},       {"param_mode", c.param_mode}, {"n_eig", c.n_eig},
           {"kernel_tol", c.kernel_tol}, {"dense_limit", c.dense_limit}, {"count_infinite", c.count_infinite},
           {"window", c.window},
           {"out", c.out},             {"seed", c.seed},           {"eigenfunctions", c.eigenfunctions},
           {"export_matrices", c.export_matrices}, {"error_floor", c.error_floor},
           {"sweep_param", c.sweep_param}, {"grid", c.grid},       {"ks", c.ks},
           {"pencil_k", c.pencil_k},   {"reference_cache", c.reference_cache}};
  j["classify_lo"] = c.classify_lo ? json(*c.classify_lo) : json(nullptr);
  j["classify_hi"] = c.classify_hi ? json(*c.classify_hi) : json(nullptr);
}

template <class T>
void read_field(const json& j, const char* key, T& dst) {
  if (!j.contains(key)) return;
  try {
    j.at(key).get_to(dst);
  } catch (const json::exception&) {
    throw ConfigError(std::string("config field '") + key + "' has the wrong type");
  }
}

void from_json(const json& j, RunConfig& c) {
  static const std::vector<std::string> known{
      "command", "domain",      "bc",          "space",       "k",      "meshes",         "mesh",
      "alpha",   "beta",        "stab_a",      "stab_b",      "param_mode", "n_eig",     "kernel_tol",
      "dense_limit", "count_infinite", "window",  "out",         "seed",        "eigenfunctions", "export_matrices",
      "error_floor", "sweep_param", "grid",    "ks",          "pencil_k", "reference_cache",
      "classify_lo", "classify_hi"};
  for (const auto& [key, value] : j.items())
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw ConfigError("unknown config field '" + key + "'");
  read_field(j, "command", c.command);
  read_field(j, "domain", c.domain);
  read_field(j, "bc", c.bc);
  read_field(j, "space", c.space);
  read_field(j, "k", c.k);
  read_field(j, "meshes", c.meshes);
  if (j.contains("mesh")) {
    std::string m;
    read_field(j, "mesh", m);
    c.meshes = {m};
  }
  read_field(j, "alpha", c.alpha);
  read_field(j, "beta", c.beta);
  read_field(j, "stab_a", c.stab_a);
  read_field(j, "stab_b", c.stab_b);
  read_field(j, "param_mode", c.param_mode);
  read_field(j, "n_eig", c.n_eig);
  read_field(j, "kernel_tol", c.kernel_tol);
  read_field(j, "dense_limit", c.dense_limit);
  read_field(j, "count_infinite", c.count_infinite);
  read_field(j, "window", c.window);
  read_field(j, "out", c.out);
  read_field(j, "seed", c.seed);
  read_field(j, "eigenfunctions", c.eigenfunctions);
  read_field(j, "export_matrices", c.export_matrices);
  read_field(j, "error_floor", c.error_floor);
  read_field(j, "sweep_param", c.sweep_param);
  read_field(j, "grid", c.grid);
  read_field(j, "ks", c.ks);
  read_field(j, "pencil_k", c.pencil_k);
  read_field(j, "reference_cache", c.reference_cache);
  for (auto [key, dst] : {std::pair{"classify_lo", &c.classify_lo}, std::pair{"classify_hi", &c.classify_hi}})
    if (j.contains(key) && !j.at(key).is_null()) {
      double v = 0;
      read_field(j, key, v);
      *dst = v;
    }
}

// Flags as given on the command line; unset ones leave the config untouched.
struct Flags {
  std::string config;
  std::optional<std::string> domain, bc, space, stab_a, stab_b, param_mode, out, sweep_param, reference_cache;
  std::optional<int> k, n_eig, eigenfunctions, pencil_k, dense_limit;
  std::optional<double> alpha, beta, window, kernel_tol, error_floor;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> meshes;
  std::vector<double> grid;
  std::vector<int> ks;
  std::optional<std::string> range;
  std::optional<double> classify_lo, classify_hi;
  bool export_matrices = false;
  bool count_infinite = false;
};

void add_common(CLI::App* sub, Flags& f) {
  sub->add_option("--config", f.config, "JSON run configuration; flags override its fields");
  sub->add_option("--domain", f.domain, "square | lshape");
  sub->add_option("--bc", f.bc, "dirichlet | neumann");
  sub->add_option("--space", f.space, "conf | nonconf");
  sub->add_option("--k", f.k, "polynomial order");
  sub->add_option("--alpha", f.alpha, "stiffness stabilization multiplier");
  sub->add_option("--beta", f.beta, "mass stabilization multiplier");
  sub->add_option("--stab-a", f.stab_a, "dofi | diagonal");
  sub->add_option("--stab-b", f.stab_b, "dofi | boundary | none");
  sub->add_option("--param-mode", f.param_mode, "recipe | raw");
  sub->add_option("--mesh", f.meshes, "FILE | voronoi:N[:SEED] | cartesian:N | triangle:N (repeatable)");
  sub->add_option("--out", f.out, "output directory");
  sub->add_option("--window", f.window, "upper bound of the tracked spectrum");
  sub->add_option("--kernel-tol", f.kernel_tol, "relative kernel tolerance");
  sub->add_option("--seed", f.seed, "seed for voronoi:N mesh specs");
  sub->add_option("--n-eig", f.n_eig, "number of eigenvalues");
  sub->add_option("--dense-limit", f.dense_limit, "largest pencil solved densely");
}

void apply(const Flags& f, RunConfig& c) {
  auto set = [](const auto& src, auto& dst) {
    if (src) dst = *src;
  };
  set(f.domain, c.domain);
  set(f.bc, c.bc);
  set(f.space, c.space);
  set(f.k, c.k);
  set(f.alpha, c.alpha);
  set(f.beta, c.beta);
  set(f.stab_a, c.stab_a);
  set(f.stab_b, c.stab_b);
  set(f.param_mode, c.param_mode);
  set(f.out, c.out);
  set(f.window, c.window);
  set(f.kernel_tol, c.kernel_tol);
  set(f.seed, c.seed);
  set(f.n_eig, c.n_eig);
  set(f.dense_limit, c.dense_limit);
  set(f.eigenfunctions, c.eigenfunctions);
  set(f.pencil_k, c.pencil_k);
  set(f.error_floor, c.error_floor);
  set(f.sweep_param, c.sweep_param);
  set(f.reference_cache, c.reference_cache);
  if (!f.meshes.empty()) c.meshes = f.meshes;
  if (!f.grid.empty()) c.grid = f.grid;
  if (!f.ks.empty()) c.ks = f.ks;
  if (f.export_matrices) c.export_matrices = true;
  if (f.count_infinite) c.count_infinite = true;
  if (f.classify_lo) c.classify_lo = f.classify_lo;
  if (f.classify_hi) c.classify_hi = f.classify_hi;
  if (f.range) {
    // start:stop:step, inclusive of stop up to rounding
    std::vector<double> v;
    std::stringstream ss(*f.range);
    std::string part;
    while (std::getline(ss, part, ':')) {
      try {
        v.push_back(std::stod(part));
      } catch (const std::exception&) {
        throw ConfigError("--range expects start:stop:step, got '" + *f.range + "'");
      }
    }
    if (v.size() != 3 || !(v[2] > 0) || v[1] < v[0]) throw ConfigError("--range expects start:stop:step with step > 0");
    c.grid.clear();
    const int n = static_cast<int>(std::floor((v[1] - v[0]) / v[2] + 1e-9));
    for (int i = 0; i <= n; ++i) c.grid.push_back(v[0] + i * v[2]);
  }
}

std::string mesh_spec(const RunConfig& c, const std::string& spec) {
  // voronoi:N without a seed takes the run seed
  if (spec.rfind("voronoi:", 0) == 0 && std::count(spec.begin(), spec.end(), ':') == 1)
    return spec + ":" + std::to_string(c.seed);
  return spec;
}

std::vector<PolygonalMesh> load_meshes(const RunConfig& c, const Domain& d) {
  if (c.meshes.empty()) throw ConfigError("no mesh given");
  std::vector<PolygonalMesh> out;
  for (const auto& m : c.meshes) out.push_back(make_mesh(d, mesh_spec(c, m)));
  return out;
}

ProblemSetup setup_of(const RunConfig& c) {
  ProblemSetup s;
  s.domain = Domain::parse(c.domain);
  s.bc = parse_boundary_condition(c.bc);
  s.space = parse_space(c.space);
  if (c.k < 1) throw ConfigError("k must be at least 1");
  s.k = c.k;
  s.assembly.stab_a = parse_stiffness_stab(c.stab_a);
  s.assembly.stab_b = parse_mass_stab(c.stab_b);
  s.assembly.mode = parse_parameter_mode(c.param_mode);
  if (c.alpha < 0 || c.beta < 0) throw ConfigError("alpha and beta must be nonnegative");
  s.alpha = c.alpha;
  s.beta = c.beta;
  return s;
}

SolveOptions solve_options(const RunConfig& c) {
  SolveOptions o;
  o.kernel_tol = c.kernel_tol;
  o.dense_limit = c.dense_limit;
  o.count_infinite = c.count_infinite;
  return o;
}

std::string quality_json(const MeshQualityReport& q, const PolygonalMesh& m) {
  json j{{"mesh_id", mesh_id(m)},
         {"num_cells", m.num_cells()},
         {"num_vertices", m.num_vertices()},
         {"num_edges", m.num_edges()},
         {"h", q.h},
         {"min_edge_to_diameter_ratio", q.min_edge_to_diameter_ratio},
         {"max_vertices_per_cell", q.max_vertices_per_cell},
         {"nonconvex_cells", q.nonconvex_cells},
         {"orientation_failures", q.orientation_failures},
         {"non_simple_cells", q.non_simple_cells},
         {"manifold_failures", q.manifold_failures},
         {"open_boundary_edges", q.open_boundary_edges},
         {"area_relative_error", std::isnan(q.area_relative_error) ? json(nullptr) : json(q.area_relative_error)},
         {"ok", q.ok()}};
  return j.dump(2) + "\n";
}

void cmd_mesh(const RunConfig& c) {
  const Domain d = Domain::parse(c.domain);
  if (c.meshes.size() != 1) throw ConfigError("mesh takes exactly one --mesh");
  const PolygonalMesh m = make_mesh(d, mesh_spec(c, c.meshes.front()));
  const MeshQualityReport q = validate_mesh(m);
  save_mesh(m, fs::path(c.out) / "mesh.json");
  write_file_atomic(fs::path(c.out) / "quality.json", quality_json(q, m));
  std::cout << "mesh " << mesh_id(m) << ": " << m.num_cells() << " cells, h = " << format_double(m.h()) << '\n';
}

// Values of the cell-wise Pi-nabla polynomial at the vertices and sub-triangle
// centroids of every cell.
std::string eigenfunction_csv(const PolygonalMesh& mesh, const DofMap& dofs, const AssembledPencil& P,
                              const Eigen::VectorXd& free_vec) {
  const Eigen::VectorXd u = dofs.expand(free_vec);
  std::vector<std::array<double, 4>> rows;
  double extreme = 0.0;
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const LocalElement el(mesh.cell_geometry(c), P.info.space, P.info.k);
    const std::vector<int> ids = dofs.cell_dofs(mesh, c);
    Eigen::VectorXd local(static_cast<Eigen::Index>(ids.size()));
    for (std::size_t i = 0; i < ids.size(); ++i) local(static_cast<Eigen::Index>(i)) = u(ids[i]);
    const Eigen::VectorXd coeffs = el.projectors().pinabla_coeff * local;
    std::vector<Point> pts = el.cell().vertices;
    for (const auto& t : triangulate_polygon(el.cell().vertices)) pts.push_back((t[0] + t[1] + t[2]) / 3.0);
    for (const Point& p : pts) {
      const double v = el.basis().evaluate(coeffs, p);
      if (std::abs(v) > std::abs(extreme)) extreme = v;
      rows.push_back({double(c), p.x(), p.y(), v});
    }
  }
  // sign so that the largest magnitude is positive
  const double sign = extreme < 0 ? -1.0 : 1.0;
  std::ostringstream out;
  out << "cell_id,x,y,value\n";
  for (const auto& r : rows)
    out << static_cast<int>(r[0]) << ',' << format_double(r[1]) << ',' << format_double(r[2]) << ','
        << format_double(sign * r[3]) << '\n';
  return out.str();
}

void cmd_solve(const RunConfig& c) {
  const ProblemSetup s = setup_of(c);
  if (c.meshes.size() != 1) throw ConfigError("solve takes exactly one --mesh");
  if (c.n_eig < 1) throw ConfigError("n_eig must be positive");
  const PolygonalMesh mesh = make_mesh(s.domain, mesh_spec(c, c.meshes.front()));
  const DofMap dofs = build_dof_map(mesh, s.space, s.k, s.bc);
  const AssembledPencil P = assemble_pencil(mesh, dofs, s.assembly);
  const SpectralResult r = solve_lowest(P, s.alpha, s.beta, c.n_eig, solve_options(c));
  std::ostringstream out;
  out << "eig_rank,lambda,residual\n";
  for (Eigen::Index i = 0; i < r.eigenvalues.size(); ++i)
    out << i + 1 << ',' << format_double(r.eigenvalues(i)) << ',' << format_double(r.residuals(i)) << '\n';
  const fs::path dir(c.out);
  write_file_atomic(dir / "spectrum.csv", out.str());
  const int nf = std::min<int>(c.eigenfunctions, static_cast<int>(r.eigenvectors.cols()));
  for (int i = 0; i < nf; ++i)
    write_file_atomic(dir / ("eigenfunction_" + std::to_string(i + 1) + ".csv"),
                      eigenfunction_csv(mesh, dofs, P, r.eigenvectors.col(i)));
  if (c.export_matrices) {
    write_matrix_market(P.A(s.alpha), dir / "A.mtx");
    write_matrix_market(P.M(s.beta), dir / "M.mtx");
  }
  std::cout << "mesh " << mesh_id(mesh) << ", " << P.size() << " dofs";
  if (r.num_infinite > 0) std::cout << ", " << r.num_infinite << " infinite";
  std::cout << '\n';
  for (Eigen::Index i = 0; i < r.eigenvalues.size(); ++i) std::cout << "  " << format_double(r.eigenvalues(i)) << '\n';
}

void cmd_converge(const RunConfig& c) {
  const ProblemSetup s = setup_of(c);
  if (c.meshes.size() < 3) throw ConfigError("family needs ≥ 3 meshes");
  if (c.n_eig < 1) throw ConfigError("n_eig must be positive");
  std::vector<double> ref;
  if (s.domain == Domain::square() && s.bc == BoundaryCondition::Dirichlet) {
    ref = exact_square_spectrum(c.n_eig);
  } else if (s.domain == Domain::lshape() && s.bc == BoundaryCondition::Neumann) {
    LshapeReferenceOptions o;
    if (!c.reference_cache.empty()) o.cache = fs::path(c.reference_cache);
    const auto r = lshape_reference_eigenvalues(c.n_eig, o);
    ref = r.values;
  } else {
    throw ConfigError("no reference spectrum for " + c.domain + " with " + c.bc + " conditions");
  }
  const auto family = load_meshes(c, s.domain);
  const ConvergenceRecord rec = run_convergence(s, family, ref, c.error_floor, solve_options(c));
  write_convergence_csv(rec, fs::path(c.out) / "convergence.csv");
  if (rec.matching_failed) std::cerr << "warning: some eigenvalue is more than 25% off its reference\n";
  for (std::size_t j = 0; j < rec.slopes.size(); ++j)
    std::cout << "eigenvalue " << j + 1 << ": slope " << format_double(rec.slopes[j]) << " over "
              << rec.fit_points[j] << " meshes\n";
}

void cmd_sweep(const RunConfig& c) {
  const ProblemSetup s = setup_of(c);
  if (c.meshes.size() != 1) throw ConfigError("sweep takes exactly one --mesh");
  if (c.sweep_param != "alpha" && c.sweep_param != "beta") throw ConfigError("sweep parameter must be alpha or beta");
  if (c.grid.empty()) throw ConfigError("sweep needs a grid (--grid or --range)");
  if (!std::is_sorted(c.grid.begin(), c.grid.end())) throw ConfigError("sweep grid must be sorted");
  const PolygonalMesh mesh = make_mesh(s.domain, mesh_spec(c, c.meshes.front()));
  const DofMap dofs = build_dof_map(mesh, s.space, s.k, s.bc);
  const AssembledPencil P = assemble_pencil(mesh, dofs, s.assembly);
  const double fixed = c.sweep_param == "alpha" ? s.beta : s.alpha;
  ClassifyOptions cls;
  if (c.classify_lo) cls.range_lo = *c.classify_lo;
  if (c.classify_hi) cls.range_hi = *c.classify_hi;
  const SweepRecord rec = run_param_sweep(P, c.sweep_param, c.grid, fixed, c.window, cls, solve_options(c));
  write_sweep_csv(rec, fs::path(c.out) / "sweep.csv");
  int counts[4] = {0, 0, 0, 0};
  for (const auto& b : rec.branches) ++counts[static_cast<int>(b.label)];
  std::cout << rec.branches.size() << " branches: " << counts[0] << " physical, " << counts[1] << " spurious-linear, "
            << counts[2] << " spurious-hyperbolic, " << counts[3] << " unclassified\n";
}

void cmd_tables(const RunConfig& c) {
  const Domain d = Domain::parse(c.domain);
  const BoundaryCondition bc = parse_boundary_condition(c.bc);
  const auto family = load_meshes(c, d);
  const auto rows = kernel_table(family, c.ks, bc, c.kernel_tol);
  write_kernel_csv(rows, fs::path(c.out) / "kernel_table.csv");
  const auto eig = pencil_eigenvalue_table(family, c.pencil_k, bc, c.kernel_tol);
  write_pencil_eigen_csv(eig, fs::path(c.out) / "pencil_eigenvalues.csv");
  std::cout << kernel_csv(rows) << pencil_eigen_csv(eig);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Virtual element eigenvalue solver and study driver"};
  app.require_subcommand(1);
  Flags f;
  auto* mesh = app.add_subcommand("mesh", "generate a mesh and its quality report");
  auto* solve = app.add_subcommand("solve", "lowest eigenpairs on one mesh");
  auto* converge = app.add_subcommand("converge", "convergence study over a mesh family");
  auto* sweep = app.add_subcommand("sweep", "alpha or beta sweep with branch classification");
  auto* tables = app.add_subcommand("tables", "kernel dimensions and smallest pencil eigenvalues");
  for (auto* sub : {mesh, solve, converge, sweep, tables}) add_common(sub, f);
  solve->add_option("--eigenfunctions", f.eigenfunctions, "number of eigenfunctions to sample");
  solve->add_flag("--export-matrices", f.export_matrices, "write A.mtx and M.mtx");
  solve->add_flag("--count-infinite", f.count_infinite, "count infinite eigenvalues on the sparse path too");
  converge->add_option("--error-floor", f.error_floor, "errors below this are left out of the slope fits");
  converge->add_option("--reference-cache", f.reference_cache, "cache file for the L-shape reference");
  sweep->add_option("--param", f.sweep_param, "alpha | beta");
  sweep->add_option("--grid", f.grid, "explicit grid values");
  sweep->add_option("--range", f.range, "start:stop:step");
  sweep->add_option("--classify-from", f.classify_lo, "smallest parameter value used to label branches");
  sweep->add_option("--classify-to", f.classify_hi, "largest parameter value used to label branches");
  tables->add_option("--ks", f.ks, "orders for the kernel table");
  tables->add_option("--pencil-k", f.pencil_k, "order for the smallest pencil eigenvalue");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  CLI::App* sub = app.get_subcommands().front();
  try {
    RunConfig c;
    if (!f.config.empty()) {
      json j;
      try {
        j = json::parse(read_file(f.config));
      } catch (const json::exception& e) {
        throw ConfigError("cannot parse config '" + f.config + "': " + e.what());
      }
      c = j.get<RunConfig>();
    }
    apply(f, c);
    if (!c.command.empty() && c.command != sub->get_name())
      throw ConfigError("config is for '" + c.command + "', not '" + sub->get_name() + "'");
    c.command = sub->get_name();
    fs::create_directories(c.out);
    write_file_atomic(fs::path(c.out) / "config.json", json(c).dump(2) + "\n");
    if (c.command == "mesh") cmd_mesh(c);
    else if (c.command == "solve") cmd_solve(c);
    else if (c.command == "converge") cmd_converge(c);
    else if (c.command == "sweep") cmd_sweep(c);
    else cmd_tables(c);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const MeshError& e) {
    std::cerr << "mesh error: " << e.what() << '\n';
    return 3;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
