#include "vemeig/gevp.hpp"

#include <lapacke.h>

#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

namespace vemeig {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

lapack_int as_int(Eigen::Index n) { return static_cast<lapack_int>(n); }

void check_square_pair(const MatrixXd& A, const MatrixXd& M) {
  if (A.rows() != A.cols() || M.rows() != M.cols() || A.rows() != M.rows())
    throw NumericalError("pencil dimension mismatch: A is " + std::to_string(A.rows()) + "x" +
                         std::to_string(A.cols()) + ", M is " + std::to_string(M.rows()) + "x" +
                         std::to_string(M.cols()));
}

// Lower Cholesky factor in place; returns false when the matrix is not positive definite.
bool cholesky_lower(MatrixXd& S) {
  if (S.rows() == 0) return true;
  const lapack_int info = LAPACKE_dpotrf(LAPACK_COL_MAJOR, 'L', as_int(S.rows()), S.data(), as_int(S.rows()));
  if (info < 0) throw NumericalError("dpotrf: invalid argument");
  return info == 0;
}

// Cholesky that also rejects numerically singular matrices (tiny pivots).
bool cholesky_safe(MatrixXd& S, double kernel_tol) {
  if (!cholesky_lower(S)) return false;
  if (S.rows() == 0) return true;
  const VectorXd d = S.diagonal().cwiseAbs2();
  return d.minCoeff() > kernel_tol * d.maxCoeff();
}

// C <- L^{-1} C L^{-T}, lower triangle only.
void reduce_congruent(MatrixXd& C, const MatrixXd& L) {
  const lapack_int info =
      LAPACKE_dsygst(LAPACK_COL_MAJOR, 1, 'L', as_int(C.rows()), C.data(), as_int(C.rows()), L.data(), as_int(L.rows()));
  if (info != 0) throw NumericalError("dsygst failed");
}

// All eigenvalues of the symmetric matrix stored in the lower triangle of S (destroyed).
VectorXd eigenvalues_lower(MatrixXd& S) {
  const lapack_int n = as_int(S.rows());
  VectorXd w(n);
  if (n == 0) return w;
  lapack_int info = LAPACKE_dsyevd_2stage(LAPACK_COL_MAJOR, 'N', 'L', n, S.data(), n, w.data());
  if (info != 0) throw NumericalError("symmetric eigensolver failed (dsyevd_2stage info " + std::to_string(info) + ")");
  return w;
}

// Eigenpairs il..iu (1-based, ascending) of the symmetric matrix in the lower triangle of S (destroyed).
void eigenpairs_lower(MatrixXd& S, lapack_int il, lapack_int iu, VectorXd& w, MatrixXd* Z) {
  const lapack_int n = as_int(S.rows());
  const lapack_int m_req = iu - il + 1;
  w.resize(n);
  lapack_int m = 0;
  std::vector<lapack_int> isuppz(static_cast<std::size_t>(2 * std::max<lapack_int>(n, 1)));
  MatrixXd dummy(1, 1);
  if (Z) Z->resize(n, m_req);
  const char range = (il == 1 && iu == n) ? 'A' : 'I';
  lapack_int info = LAPACKE_dsyevr(LAPACK_COL_MAJOR, Z ? 'V' : 'N', range, 'L', n, S.data(), n, 0.0, 0.0, il, iu, 0.0, &m,
                                   w.data(), Z ? Z->data() : dummy.data(), Z ? n : 1, isuppz.data());
  if (info != 0) throw NumericalError("symmetric eigensolver failed (dsyevr info " + std::to_string(info) + ")");
  w.conservativeResize(m);
  if (Z) Z->conservativeResize(n, m);
}

// Solves L^T X = B in place.
void solve_lower_transposed(const MatrixXd& L, MatrixXd& B) {
  if (B.cols() == 0) return;
  const lapack_int info = LAPACKE_dtrtrs(LAPACK_COL_MAJOR, 'L', 'T', 'N', as_int(L.rows()), as_int(B.cols()), L.data(),
                                         as_int(L.rows()), B.data(), as_int(B.rows()));
  if (info != 0) throw NumericalError("triangular solve failed");
}

VectorXd dense_residuals(const MatrixXd& A, const MatrixXd& M, const VectorXd& lambda, const MatrixXd& V) {
  VectorXd r(lambda.size());
  const double na = A.norm(), nm = M.norm();
  for (Eigen::Index i = 0; i < lambda.size(); ++i) {
    const VectorXd v = V.col(i);
    const double denom = (na + std::abs(lambda(i)) * nm) * v.norm();
    r(i) = denom > 0 ? (A * v - lambda(i) * (M * v)).norm() / denom : 0.0;
  }
  return r;
}

}  // namespace

Eigen::VectorXd symmetric_eigenvalues(const Eigen::MatrixXd& S) {
  if (S.rows() != S.cols()) throw NumericalError("symmetric_eigenvalues: matrix is not square");
  MatrixXd W = S;
  return eigenvalues_lower(W);
}

SpectralResult solve_spd(const MatrixXd& A, const MatrixXd& M, int n_lowest, bool vectors) {
  check_square_pair(A, M);
  const lapack_int n = as_int(A.rows());
  SpectralResult res;
  res.num_finite = static_cast<int>(n);
  if (n == 0) return res;
  MatrixXd L = M;
  if (!cholesky_lower(L))
    throw NumericalError("mass matrix is not positive definite; use the reciprocal solve for singular M");
  MatrixXd C = A;
  reduce_congruent(C, L);
  const lapack_int count = n_lowest <= 0 ? n : std::min<lapack_int>(n_lowest, n);
  if (vectors) {
    MatrixXd Z;
    eigenpairs_lower(C, 1, count, res.eigenvalues, &Z);
    solve_lower_transposed(L, Z);
    res.eigenvectors = std::move(Z);
    res.residuals = dense_residuals(A, M, res.eigenvalues, res.eigenvectors);
  } else if (count == n) {
    res.eigenvalues = eigenvalues_lower(C);
  } else {
    eigenpairs_lower(C, 1, count, res.eigenvalues, nullptr);
  }
  return res;
}

SpectralResult solve_singular_m(const MatrixXd& A, const MatrixXd& M, int n_lowest, double kernel_tol, bool vectors) {
  check_square_pair(A, M);
  const lapack_int n = as_int(A.rows());
  SpectralResult res;
  if (n == 0) return res;
  MatrixXd L = A;
  if (!cholesky_lower(L))
    throw NumericalError("stiffness matrix is not positive definite; the reciprocal solve needs a positive alpha");
  MatrixXd C = M;
  reduce_congruent(C, L);
  MatrixXd Cv = C;
  const VectorXd omega = eigenvalues_lower(C);
  // A is positive definite, so the infinite eigenvalues are the numerical kernel of M
  const int ninf = kernel_dim(M, kernel_tol);
  res.num_infinite = ninf;
  res.num_finite = static_cast<int>(n) - ninf;
  const lapack_int count = std::min<lapack_int>(n_lowest <= 0 ? res.num_finite : n_lowest, res.num_finite);
  res.eigenvalues.resize(count);
  for (lapack_int i = 0; i < count; ++i) res.eigenvalues(i) = 1.0 / omega(n - 1 - i);
  if (vectors && count > 0) {
    VectorXd w;
    MatrixXd Z;
    eigenpairs_lower(Cv, n - count + 1, n, w, &Z);
    solve_lower_transposed(L, Z);
    res.eigenvectors.resize(n, count);
    for (lapack_int i = 0; i < count; ++i) {
      const Eigen::Index src = count - 1 - i;
      res.eigenvectors.col(i) = Z.col(src) / std::sqrt(w(src));
      res.eigenvalues(i) = 1.0 / w(src);
    }
    res.residuals = dense_residuals(A, M, res.eigenvalues, res.eigenvectors);
  }
  return res;
}

SpectralResult solve_pencil(const MatrixXd& A, const MatrixXd& M, int n_lowest, double kernel_tol, bool vectors) {
  check_square_pair(A, M);
  {
    MatrixXd L = M;
    if (cholesky_safe(L, kernel_tol)) return solve_spd(A, M, n_lowest, vectors);
  }
  {
    MatrixXd L = A;
    if (cholesky_safe(L, kernel_tol)) return solve_singular_m(A, M, n_lowest, kernel_tol, vectors);
  }
  // Both singular: drop ker A ∩ ker M = ker(A + M), then solve on the rest.
  const Eigen::Index n = A.rows();
  MatrixXd S = A + M;
  VectorXd s;
  MatrixXd Q;
  eigenpairs_lower(S, 1, as_int(n), s, &Q);
  const double thr = kernel_tol * std::max(s(n - 1), 1.0);
  Eigen::Index nind = 0;
  while (nind < n && s(nind) <= thr) ++nind;
  const Eigen::Index r = n - nind;
  const MatrixXd Qr = Q.rightCols(r) * s.tail(r).cwiseSqrt().cwiseInverse().asDiagonal();
  const MatrixXd Ar = Qr.transpose() * A * Qr;
  const MatrixXd Mr = Qr.transpose() * M * Qr;
  // Ar + Mr = I on the complement: Mr u = omega u, lambda = (1 - omega) / omega.
  SpectralResult red;
  MatrixXd C = Mr;
  MatrixXd Cv = Mr;
  const VectorXd omega = eigenvalues_lower(C);
  Eigen::Index ninf = 0;
  while (ninf < r && omega(ninf) <= kernel_tol) ++ninf;
  red.num_infinite = static_cast<int>(ninf);
  red.num_finite = static_cast<int>(r - ninf);
  const Eigen::Index count = std::min<Eigen::Index>(n_lowest <= 0 ? red.num_finite : n_lowest, red.num_finite);
  red.eigenvalues.resize(count);
  for (Eigen::Index i = 0; i < count; ++i) {
    const double w = omega(r - 1 - i);
    red.eigenvalues(i) = (1.0 - w) / w;
  }
  if (vectors && count > 0) {
    VectorXd w;
    MatrixXd Z;
    eigenpairs_lower(Cv, as_int(r - count + 1), as_int(r), w, &Z);
    red.eigenvectors.resize(r, count);
    for (Eigen::Index i = 0; i < count; ++i) {
      const Eigen::Index src = count - 1 - i;
      // M-normalize: u^T Mr u = omega for unit u
      red.eigenvectors.col(i) = Z.col(src) / std::sqrt(w(src));
      red.eigenvalues(i) = (1.0 - w(src)) / w(src);
    }
  }
  SpectralResult res;
  res.eigenvalues = red.eigenvalues;
  res.num_infinite = red.num_infinite;
  res.num_finite = red.num_finite;
  res.num_indeterminate = static_cast<int>(nind);
  if (vectors && red.eigenvalues.size() > 0) {
    res.eigenvectors = Qr * red.eigenvectors;
    res.residuals = dense_residuals(A, M, res.eigenvalues, res.eigenvectors);
  }
  return res;
}

int kernel_dim(const MatrixXd& S, double kernel_tol) {
  if (S.rows() == 0) return 0;
  if (S.rows() > kDenseSpectrumLimit)
    return count_eigenvalues_at_most(S, kernel_tol * std::max(largest_eigenvalue(S), 0.0));
  const VectorXd w = symmetric_eigenvalues(S);
  const double thr = kernel_tol * std::max(w(w.size() - 1), 0.0);
  int count = 0;
  for (Eigen::Index i = 0; i < w.size(); ++i)
    if (w(i) <= thr) ++count;
  return count;
}

double smallest_pencil_eigenvalue(const MatrixXd& A1, const MatrixXd& M1, double kernel_tol) {
  check_square_pair(A1, M1);
  if (M1.size() == 0 || M1.cwiseAbs().maxCoeff() == 0.0) throw NumericalError("M1 is identically zero");
  const auto res = solve_pencil(A1, M1, 0, kernel_tol, false);
  // eigenvalues from ker A1 are zero up to roundoff
  const double zero = kernel_tol * A1.norm() / M1.norm();
  for (Eigen::Index i = 0; i < res.eigenvalues.size(); ++i)
    if (res.eigenvalues(i) > zero) return res.eigenvalues(i);
  throw NumericalError("pencil (A1, M1) has no positive finite eigenvalue");
}

Eigen::VectorXd pencil_residuals(const SparseMatrix& A, const SparseMatrix& M, const VectorXd& lambda,
                                 const MatrixXd& V) {
  VectorXd r(lambda.size());
  const double na = A.norm(), nm = M.norm();
  for (Eigen::Index i = 0; i < lambda.size(); ++i) {
    const VectorXd v = V.col(i);
    const double denom = (na + std::abs(lambda(i)) * nm) * v.norm();
    r(i) = denom > 0 ? (A * v - lambda(i) * (M * v)).norm() / denom : 0.0;
  }
  return r;
}

SpectralResult solve_lowest_sparse(const SparseMatrix& A, const SparseMatrix& M, int nev,
                                   const SparseSolveOptions& options) {
  if (A.rows() != A.cols() || M.rows() != M.cols() || A.rows() != M.rows())
    throw NumericalError("pencil dimension mismatch");
  const Eigen::Index n = A.rows();
  if (nev <= 0) throw NumericalError("number of requested eigenvalues must be positive");
  const Eigen::Index p = std::min<Eigen::Index>(n, nev + options.guard);
  if (n <= 4 * p || n <= 400) return solve_pencil(MatrixXd(A), MatrixXd(M), nev, kDefaultKernelTol, true);

  // B = A - sigma M must be positive definite; sigma = 0 when A is.
  auto factor_ok = [](const Eigen::SimplicialLDLT<SparseMatrix>& f) {
    if (f.info() != Eigen::Success) return false;
    const VectorXd d = f.vectorD();
    return d.minCoeff() > 1e-12 * d.maxCoeff();
  };
  double sigma = 0.0;
  Eigen::SimplicialLDLT<SparseMatrix> ldlt(A);
  if (!factor_ok(ldlt)) {
    sigma = -1.0;
    ldlt.compute(A + M);
    if (!factor_ok(ldlt)) throw NumericalError("A + M is singular: the pencil has indeterminate directions");
  }
  const SparseMatrix B = sigma == 0.0 ? A : SparseMatrix(A + M);

  const double na = A.norm(), nm = M.norm();
  std::mt19937_64 rng(options.rng_seed);
  std::normal_distribution<double> N01;
  MatrixXd X(n, p);
  for (Eigen::Index j = 0; j < p; ++j)
    for (Eigen::Index i = 0; i < n; ++i) X(i, j) = N01(rng);

  // Subspace iteration on B^{-1} M; Rayleigh-Ritz on M u = omega B u, lambda = sigma + 1/omega.
  // Stops once the residuals are small and the Ritz values have stagnated;
  // with badly scaled matrices the normwise residual alone stops too early.
  VectorXd prev = VectorXd::Constant(nev, std::numeric_limits<double>::quiet_NaN());
  int settled = 0;
  for (int it = 0; it < options.max_iterations; ++it) {
    MatrixXd Y = ldlt.solve(M * X);
    Eigen::HouseholderQR<MatrixXd> qr(Y);
    Y = qr.householderQ() * MatrixXd::Identity(n, p);
    MatrixXd Br = Y.transpose() * (B * Y);
    MatrixXd Mr = Y.transpose() * (M * Y);
    Br = 0.5 * (Br + Br.transpose()).eval();
    Mr = 0.5 * (Mr + Mr.transpose()).eval();
    Eigen::GeneralizedSelfAdjointEigenSolver<MatrixXd> es(Mr, Br);
    if (es.info() != Eigen::Success) throw NumericalError("Rayleigh-Ritz step failed");
    const VectorXd omega = es.eigenvalues().reverse();
    X = Y * es.eigenvectors().rowwise().reverse();
    if (!(omega(nev - 1) > 0))
      throw NumericalError("pencil has fewer than " + std::to_string(nev) + " finite eigenvalues");
    VectorXd lambda(nev);
    bool small_residual = true, stagnated = true;
    for (int i = 0; i < nev; ++i) {
      lambda(i) = sigma + 1.0 / omega(i);
      const VectorXd v = X.col(i);
      const double r = (A * v - lambda(i) * (M * v)).norm() / ((na + std::abs(lambda(i)) * nm) * v.norm());
      if (!(r <= options.tol)) small_residual = false;
      if (!(std::abs(lambda(i) - prev(i)) <= options.ritz_tol * std::max(std::abs(lambda(i)), 1.0))) stagnated = false;
    }
    prev = lambda;
    settled = small_residual ? settled + 1 : 0;
    if (small_residual && (stagnated || settled > options.settle_iterations)) {
      SpectralResult res;
      res.eigenvalues = lambda;
      res.eigenvectors = X.leftCols(nev);
      for (int i = 0; i < nev; ++i) {
        auto col = res.eigenvectors.col(i);
        col /= std::sqrt(col.dot(M * col));
      }
      res.residuals = pencil_residuals(A, M, res.eigenvalues, res.eigenvectors);
      res.num_finite = -1;
      return res;
    }
  }
  throw NumericalError("sparse eigensolver did not converge in " + std::to_string(options.max_iterations) +
                       " iterations");
}

int count_eigenvalues_at_most(const MatrixXd& S, double t) {
  if (S.rows() != S.cols()) throw NumericalError("count_eigenvalues_at_most: matrix is not square");
  const lapack_int n = as_int(S.rows());
  if (n == 0) return 0;
  MatrixXd W = S;
  W.diagonal().array() -= t;
  std::vector<lapack_int> ipiv(static_cast<std::size_t>(n));
  const lapack_int info = LAPACKE_dsytrf(LAPACK_COL_MAJOR, 'L', n, W.data(), n, ipiv.data());
  if (info < 0) throw NumericalError("dsytrf: invalid argument");
  // Sylvester: inertia of the block diagonal factor D
  int count = 0;
  for (lapack_int i = 0; i < n; ++i) {
    if (ipiv[static_cast<std::size_t>(i)] > 0) {
      if (W(i, i) <= 0) ++count;
    } else {
      const double a = W(i, i), b = W(i + 1, i), c = W(i + 1, i + 1);
      const double det = a * c - b * b;
      // a 2x2 pivot block is indefinite (det < 0) unless it is singular
      count += det < 0 ? 1 : (det == 0 ? 1 + (a + c <= 0) : 2 * (a + c < 0));
      ++i;
    }
  }
  return count;
}

double largest_eigenvalue(const MatrixXd& S) {
  const Eigen::Index n = S.rows();
  if (n == 0) return 0.0;
  const Eigen::Index m = std::min<Eigen::Index>(n, 150);
  MatrixXd Q(n, m);
  std::mt19937_64 rng(7);
  std::normal_distribution<double> N01;
  VectorXd q(n);
  for (Eigen::Index i = 0; i < n; ++i) q(i) = N01(rng);
  Q.col(0) = q.normalized();
  VectorXd alpha(m), beta(m);
  double prev = 0.0;
  for (Eigen::Index j = 0; j < m; ++j) {
    VectorXd w = S * Q.col(j);
    alpha(j) = Q.col(j).dot(w);
    // full reorthogonalization, twice
    for (int pass = 0; pass < 2; ++pass) w -= Q.leftCols(j + 1) * (Q.leftCols(j + 1).transpose() * w);
    beta(j) = w.norm();
    Eigen::SelfAdjointEigenSolver<MatrixXd> es;
    es.computeFromTridiagonal(alpha.head(j + 1), beta.head(j), Eigen::EigenvaluesOnly);
    const double top = es.eigenvalues()(j);
    if (j + 1 == m || beta(j) <= 1e-14 * std::abs(top) || (j > 10 && std::abs(top - prev) <= 1e-14 * std::abs(top)))
      return top;
    prev = top;
    Q.col(j + 1) = w / beta(j);
  }
  return prev;
}

}  // namespace vemeig
