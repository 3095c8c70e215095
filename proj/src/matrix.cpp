#include "uniemb/matrix.hpp"

#include <cmath>
#include <string>

#include "uniemb/error.hpp"

namespace uniemb {

namespace {

void CheckDims(std::size_t rows, std::size_t cols) {
  if (rows == 0 || cols == 0)
    throw Error(ErrorCode::kShapeMismatch, "matrix dimensions must be >= 1");
}

std::string ShapeStr(const Matrix &m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols) {
  CheckDims(rows, cols);
  data_.assign(rows * cols, 0.0);
}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  CheckDims(rows, cols);
  if (data_.size() != rows * cols)
    throw Error(ErrorCode::kShapeMismatch,
                "data length " + std::to_string(data_.size()) + " != " +
                    std::to_string(rows) + "x" + std::to_string(cols));
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows)
    : rows_(rows.size()), cols_(rows.size() ? rows.begin()->size() : 0) {
  CheckDims(rows_, cols_);
  data_.reserve(rows_ * cols_);
  for (const auto &r : rows) {
    if (r.size() != cols_)
      throw Error(ErrorCode::kShapeMismatch, "ragged initializer list");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

Matrix Matrix::Identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

double Matrix::FrobeniusNorm() const { return Norm(data_); }

Matrix Transpose(const Matrix &a) {
  Matrix t(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  return t;
}

Matrix MatMul(const Matrix &a, const Matrix &b) {
  if (a.cols() != b.rows())
    throw Error(ErrorCode::kShapeMismatch,
                "matmul " + ShapeStr(a) + " * " + ShapeStr(b));
  Matrix c(a.rows(), b.cols());
  // i-k-j order keeps the inner loop contiguous; fixed summation order.
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto crow = c.Row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      auto brow = b.Row(k);
      for (std::size_t j = 0; j < b.cols(); ++j) crow[j] += aik * brow[j];
    }
  }
  return c;
}

Matrix MatMulTransB(const Matrix &a, const Matrix &b) {
  if (a.cols() != b.cols())
    throw Error(ErrorCode::kShapeMismatch,
                "matmul " + ShapeStr(a) + " * (" + ShapeStr(b) + ")^T");
  Matrix c(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.rows(); ++j) c(i, j) = Dot(a.Row(i), b.Row(j));
  return c;
}

Matrix Subtract(const Matrix &a, const Matrix &b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw Error(ErrorCode::kShapeMismatch,
                "subtract " + ShapeStr(a) + " - " + ShapeStr(b));
  Matrix c = a;
  auto cd = c.data();
  auto bd = b.data();
  for (std::size_t i = 0; i < cd.size(); ++i) cd[i] -= bd[i];
  return c;
}

std::vector<double> MatVec(const Matrix &a, std::span<const double> v) {
  if (a.cols() != v.size())
    throw Error(ErrorCode::kShapeMismatch,
                "matvec " + ShapeStr(a) + " * vector(" + std::to_string(v.size()) + ")");
  std::vector<double> out(a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) out[i] = Dot(a.Row(i), v);
  return out;
}

std::vector<double> MatTVec(const Matrix &a, std::span<const double> v) {
  if (a.rows() != v.size())
    throw Error(ErrorCode::kShapeMismatch,
                "matvec (" + ShapeStr(a) + ")^T * vector(" + std::to_string(v.size()) + ")");
  std::vector<double> out(a.cols(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const double vi = v[i];
    auto row = a.Row(i);
    for (std::size_t j = 0; j < a.cols(); ++j) out[j] += row[j] * vi;
  }
  return out;
}

Matrix RowBlock(const Matrix &a, std::size_t begin, std::size_t end) {
  if (begin >= end || end > a.rows())
    throw Error(ErrorCode::kShapeMismatch, "row block out of range");
  auto src = a.data();
  std::vector<double> d(src.begin() + begin * a.cols(), src.begin() + end * a.cols());
  return Matrix(end - begin, a.cols(), std::move(d));
}

Matrix VStack(const Matrix &a, const Matrix &b) {
  if (a.cols() != b.cols())
    throw Error(ErrorCode::kShapeMismatch,
                "vstack " + ShapeStr(a) + " over " + ShapeStr(b));
  std::vector<double> d(a.data().begin(), a.data().end());
  d.insert(d.end(), b.data().begin(), b.data().end());
  return Matrix(a.rows() + b.rows(), a.cols(), std::move(d));
}

double Dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size())
    throw Error(ErrorCode::kShapeMismatch, "dot of vectors with different lengths");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double Norm(std::span<const double> a) {
  double s = 0.0;
  for (double x : a) s += x * x;
  return std::sqrt(s);
}

}  // namespace uniemb
