#pragma once

#include <cstddef>
#include <vector>

#include "uniemb/matrix.hpp"

namespace uniemb {

// Diagonal loading used when a Cholesky pivot collapses. The first retry adds
// initial_scale * trace(A) / n to the diagonal; each further retry multiplies
// the load by growth.
struct JitterPolicy {
  bool allow = true;
  double initial_scale = 1e-10;
  int max_retries = 3;
  double growth = 10.0;

  static JitterPolicy Forbid() { return JitterPolicy{.allow = false}; }
};

struct CholeskyResult {
  Matrix lower;          // L with L * L^T = A + jitter * I
  double jitter = 0.0;   // diagonal load actually applied, 0 if none
};

// Lower Cholesky factor of a symmetric positive (semi-)definite matrix.
// Throws NotSquare, NotSymmetric, RankDeficient.
CholeskyResult Cholesky(const Matrix &a, const JitterPolicy &policy = {});

// Eigenvalues sorted descending; row i of `vectors` is the unit eigenvector of
// values[i], so A = U^T diag(values) U with U = vectors.
struct EigenDecomposition {
  std::vector<double> values;
  Matrix vectors;

  std::size_t dim() const noexcept { return values.size(); }
};

struct JacobiOptions {
  double tolerance = 1e-12;  // off-diagonal Frobenius norm relative to ||A||_F
  int max_sweeps = 100;
};

// Symmetric eigendecomposition by cyclic Jacobi rotations. Eigenvalues with
// magnitude below 1e-12 of the largest magnitude are clamped to zero.
// Throws NotSquare, NotSymmetric, NoConvergence.
EigenDecomposition SymEig(const Matrix &a, const JacobiOptions &opts = {});

// P (rank x n) with row i = sqrt(lambda_i) * u_i, so P^T P is the best
// rank-`rank` approximation of A. Throws RankOutOfRange and
// NegativeEigenvalueInRange.
Matrix TruncatedRoot(const EigenDecomposition &eig, std::size_t rank);

// Smallest r with sum_{i<r} lambda_i >= fraction * sum lambda_i, clamped to
// [1, cap]. Negative eigenvalues count as zero.
std::size_t EnergyRank(const std::vector<double> &values, double fraction,
                       std::size_t cap);

// Fraction of the (non-negative) eigenvalue mass kept by the leading `rank`.
double RetainedEnergy(const std::vector<double> &values, std::size_t rank);

// Checks |a_ij - a_ji| <= rel_tol * ||A||_F. Throws NotSquare / NotSymmetric.
void RequireSymmetric(const Matrix &a, double rel_tol = 1e-9);

}  // namespace uniemb
