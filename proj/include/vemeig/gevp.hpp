#pragma once

#include "vemeig/geometry.hpp"

#include <Eigen/Sparse>

#include <cstdint>

namespace vemeig {

using SparseMatrix = Eigen::SparseMatrix<double>;

/// Finite eigenvalues in ascending order (with multiplicity) and, when
/// requested, M-orthonormal eigenvectors in the same order.
struct SpectralResult {
  Eigen::VectorXd eigenvalues;
  Eigen::MatrixXd eigenvectors;
  /// ||A v - lambda M v|| / ((||A||_F + |lambda| ||M||_F) ||v||) per reported pair.
  Eigen::VectorXd residuals;
  /// Directions in ker M outside ker A (eigenvalue +infinity).
  int num_infinite = 0;
  /// Directions in ker A and ker M simultaneously; never reported as finite.
  int num_indeterminate = 0;
  /// Number of finite eigenvalues of the pencil (the reported ones may be fewer).
  int num_finite = 0;
};

constexpr double kDefaultKernelTol = 1e-10;
/// Above this size kernel_dim counts through an inertia computation instead of a full spectrum.
constexpr Eigen::Index kDenseSpectrumLimit = 1500;

/// A u = lambda M u with M symmetric positive definite (Cholesky reduction).
/// Returns the n_lowest smallest pairs (all when n_lowest <= 0). Throws
/// NumericalError when M is not positive definite.
SpectralResult solve_spd(const Eigen::MatrixXd& A, const Eigen::MatrixXd& M, int n_lowest, bool vectors = true);

/// Reciprocal problem M u = omega A u with A symmetric positive definite and M
/// positive semidefinite. The kernel_dim(M) smallest omega count as infinite
/// eigenvalues, the others give lambda = 1 / omega.
SpectralResult solve_singular_m(const Eigen::MatrixXd& A, const Eigen::MatrixXd& M, int n_lowest,
                                double kernel_tol = kDefaultKernelTol, bool vectors = true);

/// Any symmetric positive semidefinite pair: Cholesky of M, else of A, else
/// deflation of ker(A + M) followed by M u = omega (A + M) u. A Cholesky factor
/// whose squared pivot ratio falls below kernel_tol counts as a failure.
SpectralResult solve_pencil(const Eigen::MatrixXd& A, const Eigen::MatrixXd& M, int n_lowest,
                            double kernel_tol = kDefaultKernelTol, bool vectors = true);

/// Number of eigenvalues <= kernel_tol * lambda_max, so the count does not
/// depend on the scaling of S.
int kernel_dim(const Eigen::MatrixXd& S, double kernel_tol = kDefaultKernelTol);

/// All eigenvalues of a symmetric matrix, ascending.
Eigen::VectorXd symmetric_eigenvalues(const Eigen::MatrixXd& S);

/// Smallest positive finite eigenvalue of A1 x = lambda M1 x: ker M1 is
/// deflated and the zero eigenvalues of ker A1 (below
/// kernel_tol * ||A1||_F / ||M1||_F) are skipped.
double smallest_pencil_eigenvalue(const Eigen::MatrixXd& A1, const Eigen::MatrixXd& M1,
                                  double kernel_tol = kDefaultKernelTol);

struct SparseSolveOptions {
  /// Normwise residual ||A v - theta M v|| / ((||A||_F + |theta| ||M||_F) ||v||) at which iteration stops.
  double tol = 1e-13;
  /// Relative change of the Ritz values between sweeps at which they count as settled.
  double ritz_tol = 1e-14;
  /// Accept anyway after this many sweeps with small residuals (roundoff floor).
  int settle_iterations = 60;
  int max_iterations = 1000;
  /// Extra block vectors beyond the requested count.
  int guard = 12;
  std::uint64_t rng_seed = 12345;
};

/// Lowest finite eigenpairs of a sparse pencil with A, M positive semidefinite
/// and A + M positive definite. Block subspace iteration on (A - sigma M)^{-1} M
/// with Rayleigh-Ritz on the reciprocal pencil, sigma = 0 when A is positive
/// definite and -1 otherwise, so a singular M is allowed. Small problems go to
/// solve_pencil. num_finite is -1 (unknown) on the iterative path.
SpectralResult solve_lowest_sparse(const SparseMatrix& A, const SparseMatrix& M, int nev,
                                   const SparseSolveOptions& options = {});

/// Number of eigenvalues of the symmetric matrix S that are <= t, from the
/// Bunch-Kaufman inertia of S - t I.
int count_eigenvalues_at_most(const Eigen::MatrixXd& S, double t);

/// Largest eigenvalue of a symmetric matrix (Lanczos, full reorthogonalization).
double largest_eigenvalue(const Eigen::MatrixXd& S);

/// Normwise residuals of computed pairs.
Eigen::VectorXd pencil_residuals(const SparseMatrix& A, const SparseMatrix& M, const Eigen::VectorXd& lambda,
                                 const Eigen::MatrixXd& V);

}  // namespace vemeig
