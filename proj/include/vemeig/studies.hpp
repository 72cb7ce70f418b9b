#pragma once

#include "vemeig/assembly.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace vemeig {

/// {i^2 + j^2 : i, j >= 1} ascending with multiplicity: the Dirichlet spectrum of (0,pi)^2.
std::vector<double> exact_square_spectrum(int n_lowest);

/// "voronoi:N:SEED", "cartesian:N", "triangle:N" or a mesh file path.
PolygonalMesh make_mesh(const Domain& domain, std::string_view source);

/// sqrt(|Omega| / number of cells): pi/n for n^2 cells on the square.
double nominal_h(const PolygonalMesh& mesh);

struct ProblemSetup {
  Domain domain = Domain::square();
  BoundaryCondition bc = BoundaryCondition::Dirichlet;
  SpaceKind space = SpaceKind::Conforming;
  int k = 1;
  AssemblyOptions assembly;
  double alpha = 1.0;
  double beta = 1.0;
};

struct SolveOptions {
  double kernel_tol = kDefaultKernelTol;
  /// Pencils up to this size use the dense solver; larger ones the sparse one.
  int dense_limit = 1500;
  /// Count infinite eigenvalues on the sparse path too (dense inertia computation).
  bool count_infinite = false;
};

/// Lowest n_lowest finite eigenpairs of A(alpha) u = lambda M(beta) u.
SpectralResult solve_lowest(const AssembledPencil& pencil, double alpha, double beta, int n_lowest,
                            const SolveOptions& options = {});

/// h is nominal_h of each mesh.
struct ConvergenceRow {
  std::string mesh_id;
  double h = 0.0;
  int N_h = 0;
  int eig_index = 0;  // 1-based
  double lambda_ref = 0.0;
  double lambda_h = 0.0;
  double rel_err = 0.0;
};

struct ConvergenceRecord {
  std::vector<ConvergenceRow> rows;
  std::vector<double> h;
  std::vector<int> N_h;
  /// Fitted log-log slope per eigenvalue index (NaN when fewer than two meshes are above the floor).
  std::vector<double> slopes;
  /// Number of meshes above the floor used in each fit.
  std::vector<int> fit_points;
  /// Set when some computed eigenvalue is further than 25% from its reference.
  bool matching_failed = false;

  /// Relative error of eigenvalue index j (1-based) on mesh m.
  double error(int m, int j) const;
};

/// Assembles and solves on each mesh of the family and matches computed to
/// reference eigenvalues by sorted order. For Neumann problems the constant
/// mode is dropped first, so references are the nonzero eigenvalues.
ConvergenceRecord run_convergence(const ProblemSetup& setup, const std::vector<PolygonalMesh>& family,
                                  const std::vector<double>& reference, double error_floor = 1e-11,
                                  const SolveOptions& solve = {});

/// Least-squares slope of log(err) against log(h), over points with err > floor.
double fit_loglog_slope(const std::vector<double>& h, const std::vector<double>& err, double floor,
                        int* used = nullptr);

enum class BranchLabel { Physical, SpuriousLinear, SpuriousHyperbolic, Unclassified };
std::string to_string(BranchLabel b);

struct ClassifyOptions {
  double r2_threshold = 0.99;
  double flatness = 0.01;
  /// Only grid values in [range_lo, range_hi] enter the classification.
  double range_lo = -1e300;
  double range_hi = 1e300;
  int min_points = 4;
};

struct Branch {
  int start = 0;  // first grid index
  std::vector<double> values;
  BranchLabel label = BranchLabel::Unclassified;
  double fit_r2 = 0.0;  // R^2 of the fit behind the label (0 for unclassified)
  double fit_a = 0.0;   // linear: slope a in a p + b; hyperbolic: c in c / p + d
  double fit_b = 0.0;
  double variation = 0.0;  // |last - first| / |mean| over the classified range
};

struct SweepRecord {
  std::string param_name;
  std::vector<double> grid;
  double window = 40.0;
  /// Sorted spectra per grid point, up to the largest in-window count over the grid.
  std::vector<std::vector<double>> spectra;
  std::vector<Branch> branches;
  /// branch_of[g][r]: branch containing rank r at grid point g, -1 when above the window.
  std::vector<std::vector<int>> branch_of;
};

/// Tracks in-window eigenvalues across the grid and classifies the branches.
/// Each step assigns the values to branches (a permutation) by minimizing
/// sum sqrt(|prediction - value|), the prediction being the linear extrapolation
/// of the two previous values (in 1/beta for beta sweeps). Surplus branches end,
/// surplus values start new branches.
SweepRecord track_branches(std::string param_name, std::vector<double> grid,
                           std::vector<std::vector<double>> spectra, double window,
                           const ClassifyOptions& classify = {});

/// alpha or beta sweep of an assembled pencil, the other parameter fixed.
SweepRecord run_param_sweep(const AssembledPencil& pencil, std::string_view param, const std::vector<double>& grid,
                            double fixed_other, double window, const ClassifyOptions& classify = {},
                            const SolveOptions& solve = {});

/// Two-family model pencil. In the orthogonal frame the four matrices are
/// diagonal; build_synthetic_pencil puts ker A1 on the first dim_kerA1
/// coordinates and ker M1 on the next dim_kerM1.
struct SyntheticPencil {
  int n = 0;
  int dim_kerA1 = 0;
  int dim_kerM1 = 0;
  Eigen::MatrixXd A1, A2, M1, M2;
  Eigen::MatrixXd frame;
  /// Generator diagonals in the frame.
  Eigen::VectorXd a1, a2, m1, m2;
  /// mu_i = a2/m1 on ker A1 (lambda = alpha mu); omega_i = m2/a1 on ker M1 (lambda = 1/(beta omega)).
  Eigen::VectorXd mu, omega;
  std::vector<int> kerA1_index, kerM1_index, rest_index;
};

SyntheticPencil build_synthetic_pencil(int n, int dim_kerA1, int dim_kerM1, std::uint64_t rng_seed,
                                       bool rotate = true);
/// Same construction from explicit diagonals and an orthogonal frame. The
/// kernels are read off the zero entries of a1 and m1.
SyntheticPencil make_synthetic_pencil(Eigen::VectorXd a1, Eigen::VectorXd a2, Eigen::VectorXd m1, Eigen::VectorXd m2,
                                      Eigen::MatrixXd frame);
/// Throws NumericalError when assumptions i)-iii) fail at tol.
void check_synthetic_assumptions(const SyntheticPencil& p, double tol = 1e-12);

/// Finite eigenvalues (ascending) from the two reduced problems on ker A1 and
/// ker M1 plus the problem on their complement.
std::vector<double> predict_families(const SyntheticPencil& p, double alpha, double beta);

struct KernelRow {
  int k = 0;
  std::string mesh_id;
  int N_cells = 0;
  int ker_A1 = 0;
  int ker_M1 = 0;
};

std::vector<KernelRow> kernel_table(const std::vector<PolygonalMesh>& family, const std::vector<int>& ks,
                                    BoundaryCondition bc = BoundaryCondition::Dirichlet,
                                    double kernel_tol = kDefaultKernelTol);

struct PencilEigenRow {
  std::string mesh_id;
  int N_cells = 0;
  double lambda_min = 0.0;
};

std::vector<PencilEigenRow> pencil_eigenvalue_table(const std::vector<PolygonalMesh>& family, int k,
                                                    BoundaryCondition bc = BoundaryCondition::Dirichlet,
                                                    double kernel_tol = kDefaultKernelTol);

struct ExtrapolatedReference {
  std::vector<double> values;  // nonzero eigenvalues
  std::vector<std::vector<double>> inputs;  // raw spectra per mesh
  std::vector<double> h_eff;
  std::vector<std::string> meshes;
  bool extrapolated = true;  // false when a non-monotone sequence forced raw finest values
  std::string warning;
};

struct LshapeReferenceOptions {
  /// Mesh specs as accepted by make_mesh; nested Cartesian grids by default
  /// because the corner singularity makes Voronoi error sequences erratic.
  std::vector<std::string> meshes{"cartesian:16", "cartesian:32", "cartesian:64"};
  int k = 2;
  std::optional<std::filesystem::path> cache;
};

/// Richardson extrapolation of three spectra computed on meshes of size
/// h_eff[0] > h_eff[1] > h_eff[2], with the order observed per eigenvalue.
/// When some sequence is not monotone with shrinking differences the finest
/// values are returned instead and extrapolated is false.
ExtrapolatedReference extrapolate_spectra(std::vector<std::vector<double>> inputs, std::vector<double> h_eff);

/// Neumann spectrum of the L-shape from a Richardson extrapolation over three
/// meshes with the observed order, h_eff = nominal_h. The constant mode is
/// excluded. Reads and writes the optional cache file.
ExtrapolatedReference lshape_reference_eigenvalues(int n_lowest, const LshapeReferenceOptions& options = {});

void write_convergence_csv(const ConvergenceRecord& rec, const std::filesystem::path& path);
void write_sweep_csv(const SweepRecord& rec, const std::filesystem::path& path);
void write_kernel_csv(const std::vector<KernelRow>& rows, const std::filesystem::path& path);
void write_pencil_eigen_csv(const std::vector<PencilEigenRow>& rows, const std::filesystem::path& path);
std::string convergence_csv(const ConvergenceRecord& rec);
std::string sweep_csv(const SweepRecord& rec);
std::string kernel_csv(const std::vector<KernelRow>& rows);
std::string pencil_eigen_csv(const std::vector<PencilEigenRow>& rows);

}  // namespace vemeig
