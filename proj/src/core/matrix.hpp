#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "ad.hpp"
#include "errors.hpp"

namespace svgp {

// Dense row-major matrix over double or Var.
template <class T>
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, const T& fill = T(0.0))
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<T> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) throw ShapeError("Matrix: data size does not match shape");
  }
  Matrix(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = rows.size();
    cols_ = rows_ ? rows.begin()->size() : 0;
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
      if (r.size() != cols_) throw ShapeError("Matrix: ragged initializer");
      for (double v : r) data_.emplace_back(v);
    }
  }

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = T(1.0);
    return m;
  }
  static Matrix column(std::vector<T> v) {
    const std::size_t n = v.size();
    return Matrix(n, 1, std::move(v));
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  T& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  const T& operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::span<T> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
  std::span<const T> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

  std::vector<T>& data() { return data_; }
  const std::vector<T>& data() const { return data_; }

  Matrix transpose() const {
    Matrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
  }

  std::vector<T> col(std::size_t j) const {
    std::vector<T> c(rows_);
    for (std::size_t i = 0; i < rows_; ++i) c[i] = (*this)(i, j);
    return c;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

using MatrixD = Matrix<double>;
using MatrixV = Matrix<Var>;

inline void require_shape(bool ok, const std::string& what) {
  if (!ok) throw ShapeError(what);
}

template <class T>
Matrix<double> values(const Matrix<T>& m) {
  Matrix<double> out(m.rows(), m.cols());
  for (std::size_t k = 0; k < m.size(); ++k) out.data()[k] = value_of(m.data()[k]);
  return out;
}

template <class T>
std::vector<double> values(const std::vector<T>& v) {
  std::vector<double> out(v.size());
  for (std::size_t k = 0; k < v.size(); ++k) out[k] = value_of(v[k]);
  return out;
}

template <class T>
Matrix<T> lift(const Matrix<double>& m) {
  Matrix<T> out(m.rows(), m.cols());
  for (std::size_t k = 0; k < m.size(); ++k) out.data()[k] = T(m.data()[k]);
  return out;
}

template <class T>
Matrix<T> matmul(const Matrix<T>& a, const Matrix<T>& b) {
  require_shape(a.cols() == b.rows(), "matmul: inner dimensions differ");
  const Matrix<T> bt = b.transpose();
  Matrix<T> c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) = dot<T>(a.row(i), bt.row(j));
  return c;
}

// a^T b without materializing the transpose of a.
template <class T>
Matrix<T> matmul_tn(const Matrix<T>& a, const Matrix<T>& b) {
  require_shape(a.rows() == b.rows(), "matmul_tn: row counts differ");
  return matmul(a.transpose(), b);
}

// a b^T
template <class T>
Matrix<T> matmul_nt(const Matrix<T>& a, const Matrix<T>& b) {
  require_shape(a.cols() == b.cols(), "matmul_nt: column counts differ");
  Matrix<T> c(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.rows(); ++j) c(i, j) = dot<T>(a.row(i), b.row(j));
  return c;
}

template <class T>
std::vector<T> matvec(const Matrix<T>& a, std::span<const T> x) {
  require_shape(a.cols() == x.size(), "matvec: dimension mismatch");
  std::vector<T> y(a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) y[i] = dot<T>(a.row(i), x);
  return y;
}

template <class T>
Matrix<T> add(const Matrix<T>& a, const Matrix<T>& b, double sign_b = 1.0) {
  require_shape(a.rows() == b.rows() && a.cols() == b.cols(), "add: shape mismatch");
  Matrix<T> c(a.rows(), a.cols());
  for (std::size_t k = 0; k < a.size(); ++k)
    c.data()[k] = sign_b > 0 ? a.data()[k] + b.data()[k] : a.data()[k] - b.data()[k];
  return c;
}

template <class T>
T trace(const Matrix<T>& a) {
  require_shape(a.rows() == a.cols(), "trace: matrix not square");
  T t(0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) t += a(i, i);
  return t;
}

// Rows of a selected by idx, in order.
template <class T>
Matrix<T> take_rows(const Matrix<T>& a, std::span<const std::size_t> idx) {
  Matrix<T> out(idx.size(), a.cols());
  for (std::size_t r = 0; r < idx.size(); ++r) {
    require_shape(idx[r] < a.rows(), "take_rows: index out of range");
    for (std::size_t j = 0; j < a.cols(); ++j) out(r, j) = a(idx[r], j);
  }
  return out;
}

// Horizontal concatenation [a | b].
template <class T>
Matrix<T> hcat(const Matrix<T>& a, const Matrix<T>& b) {
  require_shape(a.rows() == b.rows(), "hcat: row counts differ");
  Matrix<T> out(a.rows(), a.cols() + b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) out(i, j) = a(i, j);
    for (std::size_t j = 0; j < b.cols(); ++j) out(i, a.cols() + j) = b(i, j);
  }
  return out;
}

}  // namespace svgp
