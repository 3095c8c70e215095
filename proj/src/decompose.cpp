#include "uniemb/decompose.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "uniemb/error.hpp"

namespace uniemb {

void RequireSymmetric(const Matrix &a, double rel_tol) {
  if (!a.IsSquare())
    throw Error(ErrorCode::kNotSquare, "expected a square matrix, got " +
                                           std::to_string(a.rows()) + "x" +
                                           std::to_string(a.cols()));
  const double tol = rel_tol * a.FrobeniusNorm();
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = i + 1; j < a.cols(); ++j)
      if (std::abs(a(i, j) - a(j, i)) > tol)
        throw Error(ErrorCode::kNotSymmetric,
                    "asymmetry at (" + std::to_string(i) + "," + std::to_string(j) + ")");
}

namespace {

// Returns false on a non-positive pivot.
bool TryCholesky(const Matrix &a, double load, Matrix *l) {
  const std::size_t n = a.rows();
  double max_diag = 0.0;
  for (std::size_t i = 0; i < n; ++i) max_diag = std::max(max_diag, a(i, i) + load);
  const double pivot_tol = static_cast<double>(n) *
                           std::numeric_limits<double>::epsilon() * max_diag;

  Matrix &out = *l;
  for (std::size_t j = 0; j < n; ++j) {
    auto lj = out.Row(j);
    double d = a(j, j) + load;
    for (std::size_t k = 0; k < j; ++k) d -= lj[k] * lj[k];
    if (!(d > pivot_tol)) return false;
    const double ljj = std::sqrt(d);
    lj[j] = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      auto li = out.Row(i);
      double s = 0.5 * (a(i, j) + a(j, i));
      for (std::size_t k = 0; k < j; ++k) s -= li[k] * lj[k];
      li[j] = s / ljj;
    }
  }
  return true;
}

}  // namespace

CholeskyResult Cholesky(const Matrix &a, const JitterPolicy &policy) {
  RequireSymmetric(a);
  const std::size_t n = a.rows();

  Matrix l(n, n);
  if (TryCholesky(a, 0.0, &l)) return {std::move(l), 0.0};
  if (!policy.allow)
    throw Error(ErrorCode::kRankDeficient,
                "non-positive pivot and jitter is forbidden");

  double trace = 0.0;
  for (std::size_t i = 0; i < n; ++i) trace += a(i, i);
  double load = policy.initial_scale * std::abs(trace) / static_cast<double>(n);
  if (!(load > 0.0)) load = policy.initial_scale;
  for (int attempt = 0; attempt < policy.max_retries; ++attempt) {
    Matrix lj(n, n);
    if (TryCholesky(a, load, &lj)) return {std::move(lj), load};
    load *= policy.growth;
  }
  throw Error(ErrorCode::kRankDeficient,
              "non-positive pivot persists after " +
                  std::to_string(policy.max_retries) + " jitter retries");
}

EigenDecomposition SymEig(const Matrix &input, const JacobiOptions &opts) {
  RequireSymmetric(input);
  const std::size_t n = input.rows();

  Matrix a = input;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) a(i, j) = a(j, i) = 0.5 * (a(i, j) + a(j, i));

  // Rows of v accumulate the rotations; row p ends up as eigenvector p.
  Matrix v = Matrix::Identity(n);
  const double target = opts.tolerance * a.FrobeniusNorm();

  auto off_norm = [&]() {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) s += 2.0 * a(i, j) * a(i, j);
    return std::sqrt(s);
  };

  int sweep = 0;
  while (off_norm() > target) {
    if (sweep++ >= opts.max_sweeps)
      throw Error(ErrorCode::kNoConvergence,
                  "Jacobi did not converge in " + std::to_string(opts.max_sweeps) +
                      " sweeps");
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double app = a(p, p), aqq = a(q, q);
        const double theta = (aqq - app) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;

        for (std::size_t k = 0; k < n; ++k) {
          if (k == p || k == q) continue;
          const double akp = a(k, p), akq = a(k, q);
          const double nkp = c * akp - s * akq;
          const double nkq = s * akp + c * akq;
          a(k, p) = a(p, k) = nkp;
          a(k, q) = a(q, k) = nkq;
        }
        a(p, p) = app - t * apq;
        a(q, q) = aqq + t * apq;
        a(p, q) = a(q, p) = 0.0;

        auto vp = v.Row(p);
        auto vq = v.Row(q);
        for (std::size_t k = 0; k < n; ++k) {
          const double x = vp[k], y = vq[k];
          vp[k] = c * x - s * y;
          vq[k] = s * x + c * y;
        }
      }
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return a(i, i) > a(j, j); });

  EigenDecomposition out{std::vector<double>(n), Matrix(n, n)};
  double scale = 0.0;
  for (std::size_t i = 0; i < n; ++i) scale = std::max(scale, std::abs(a(i, i)));
  for (std::size_t r = 0; r < n; ++r) {
    const std::size_t src = order[r];
    double lambda = a(src, src);
    if (std::abs(lambda) < 1e-12 * scale) lambda = 0.0;
    out.values[r] = lambda;

    // Sign convention: the largest-magnitude component is positive.
    auto from = v.Row(src);
    std::size_t arg = 0;
    for (std::size_t k = 1; k < n; ++k)
      if (std::abs(from[k]) > std::abs(from[arg])) arg = k;
    const double sign = from[arg] < 0.0 ? -1.0 : 1.0;
    auto to = out.vectors.Row(r);
    for (std::size_t k = 0; k < n; ++k) to[k] = sign * from[k];
  }
  return out;
}

Matrix TruncatedRoot(const EigenDecomposition &eig, std::size_t rank) {
  const std::size_t n = eig.dim();
  if (rank < 1 || rank > n)
    throw Error(ErrorCode::kRankOutOfRange,
                "rank " + std::to_string(rank) + " outside [1, " + std::to_string(n) + "]");
  double scale = 0.0;
  for (double x : eig.values) scale = std::max(scale, std::abs(x));

  Matrix p(rank, n);
  for (std::size_t i = 0; i < rank; ++i) {
    const double lambda = eig.values[i];
    if (lambda < -1e-12 * scale)
      throw Error(ErrorCode::kNegativeEigenvalueInRange,
                  "eigenvalue " + std::to_string(i) + " is " + std::to_string(lambda));
    const double root = std::sqrt(std::max(lambda, 0.0));
    auto u = eig.vectors.Row(i);
    auto row = p.Row(i);
    for (std::size_t k = 0; k < n; ++k) row[k] = root * u[k];
  }
  return p;
}

std::size_t EnergyRank(const std::vector<double> &values, double fraction,
                       std::size_t cap) {
  double total = 0.0;
  for (double x : values) total += std::max(x, 0.0);
  const std::size_t limit = std::max<std::size_t>(1, std::min(cap, values.size()));
  if (!(total > 0.0)) return 1;
  double acc = 0.0;
  for (std::size_t r = 0; r < limit; ++r) {
    acc += std::max(values[r], 0.0);
    if (acc >= fraction * total) return r + 1;
  }
  return limit;
}

double RetainedEnergy(const std::vector<double> &values, std::size_t rank) {
  double total = 0.0, kept = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double x = std::max(values[i], 0.0);
    total += x;
    if (i < rank) kept += x;
  }
  return total > 0.0 ? kept / total : 1.0;
}

}  // namespace uniemb
