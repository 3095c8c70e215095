#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "uniemb/clspace.hpp"
#include "uniemb/error.hpp"
#include "uniemb/matrix.hpp"

namespace uniemb::testing {

inline Matrix RandomMatrix(std::size_t rows, std::size_t cols, std::mt19937_64 &gen,
                           double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  Matrix m(rows, cols);
  for (double &x : m.data()) x = n(gen);
  return m;
}

inline std::vector<double> RandomVector(std::size_t n, std::mt19937_64 &gen) {
  std::normal_distribution<double> d(0.0, 1.0);
  std::vector<double> v(n);
  for (double &x : v) x = d(gen);
  return v;
}

inline Embedding RandomEmbedding(std::size_t n, std::mt19937_64 &gen) {
  return Embedding(RandomVector(n, gen));
}

// Naive triple loop; independent of the library's matmul kernels.
inline Matrix NaiveProduct(const Matrix &a, const Matrix &b, bool transpose_b) {
  const std::size_t inner = a.cols();
  const std::size_t cols = transpose_b ? b.rows() : b.cols();
  Matrix c(a.rows(), cols);
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < cols; ++j) {
      long double s = 0.0L;
      for (std::size_t k = 0; k < inner; ++k)
        s += static_cast<long double>(a(i, k)) * (transpose_b ? b(j, k) : b(k, j));
      c(i, j) = static_cast<double>(s);
    }
  return c;
}

inline double FrobDiff(const Matrix &a, const Matrix &b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.data().size(); ++i) {
    const double d = a.data()[i] - b.data()[i];
    s += d * d;
  }
  return std::sqrt(s);
}

inline double RelFrobError(const Matrix &got, const Matrix &want) {
  return FrobDiff(got, want) / want.FrobeniusNorm();
}

// Plain cosine in long double, used as the reference for score identities.
inline double RefCosine(const std::vector<double> &a, const std::vector<double> &b) {
  long double ab = 0, aa = 0, bb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += static_cast<long double>(a[i]) * b[i];
    aa += static_cast<long double>(a[i]) * a[i];
    bb += static_cast<long double>(b[i]) * b[i];
  }
  return static_cast<double>(ab / std::sqrt(aa * bb));
}

// c = W^T e, computed directly from the head entries.
inline std::vector<double> RefClEmbed(const Matrix &w, std::span<const double> e) {
  std::vector<double> c(w.cols(), 0.0);
  for (std::size_t j = 0; j < w.cols(); ++j) {
    long double s = 0.0L;
    for (std::size_t i = 0; i < w.rows(); ++i) s += static_cast<long double>(w(i, j)) * e[i];
    c[j] = static_cast<double>(s);
  }
  return c;
}

template <typename Fn>
ErrorCode CaptureCode(Fn fn) {
  try {
    fn();
  } catch (const Error &e) {
    return e.code();
  }
  throw std::logic_error("expected a uniemb::Error");
}

}  // namespace uniemb::testing
