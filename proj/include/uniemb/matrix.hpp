#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace uniemb {

// Dense row-major matrix of doubles. Always at least 1x1.
class Matrix {
 public:
  Matrix(std::size_t rows, std::size_t cols);  // zero-filled
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix Identity(std::size_t n);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool IsSquare() const noexcept { return rows_ == cols_; }

  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  double &operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }

  std::span<const double> Row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }
  std::span<double> Row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }

  std::span<const double> data() const noexcept { return data_; }
  std::span<double> data() noexcept { return data_; }

  double FrobeniusNorm() const;

  friend bool operator==(const Matrix &a, const Matrix &b) = default;

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<double> data_;
};

Matrix Transpose(const Matrix &a);
Matrix MatMul(const Matrix &a, const Matrix &b);
// a * b^T without materializing the transpose.
Matrix MatMulTransB(const Matrix &a, const Matrix &b);
Matrix Subtract(const Matrix &a, const Matrix &b);
std::vector<double> MatVec(const Matrix &a, std::span<const double> v);
// a^T * v: the cl-embedding map c = W^T e and the projection y = L^T e.
std::vector<double> MatTVec(const Matrix &a, std::span<const double> v);

// Rows [begin, end) as a new matrix.
Matrix RowBlock(const Matrix &a, std::size_t begin, std::size_t end);
// Stack a on top of b.
Matrix VStack(const Matrix &a, const Matrix &b);

double Dot(std::span<const double> a, std::span<const double> b);
double Norm(std::span<const double> a);

}  // namespace uniemb
