#include "adarank/matrix.hpp"

#include <cmath>
#include <string>

#include "adarank/errors.hpp"
#include "adarank/kernels.hpp"

namespace adarank {
namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw ShapeError(msg);
}

std::string shape(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {
  require(rows > 0 && cols > 0, "matrix dimensions must be positive");
}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  require(rows > 0 && cols > 0, "matrix dimensions must be positive");
  require(data_.size() == rows * cols, "matrix data length " + std::to_string(data_.size()) +
                                           " does not match " + std::to_string(rows) + "x" +
                                           std::to_string(cols));
  check_finite(*this, "matrix data");
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ ? rows.begin()->size() : 0;
  require(rows_ > 0 && cols_ > 0, "matrix dimensions must be positive");
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    require(r.size() == cols_, "ragged matrix literal");
    data_.insert(data_.end(), r.begin(), r.end());
  }
  check_finite(*this, "matrix literal");
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

void check_finite(std::span<const double> v, const char* what) {
  for (double x : v) {
    if (!std::isfinite(x)) throw NumericError(std::string("non-finite value in ") + what);
  }
}

void check_finite(const Matrix& m, const char* what) { check_finite(m.values(), what); }

Matrix matmul(const Matrix& a, const Matrix& b) {
  require(a.cols() == b.rows(), "matmul: " + shape(a) + " times " + shape(b));
  const auto& k = kernels::active();
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto out = c.row(i);
    for (std::size_t p = 0; p < a.cols(); ++p) {
      const double s = a(i, p);
      if (s != 0.0) k.axpy(s, b.row(p), out);
    }
  }
  check_finite(c, "matmul result");
  return c;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  require(a.rows() == b.rows(), "matmul_tn: " + shape(a) + "^T times " + shape(b));
  const auto& k = kernels::active();
  Matrix c(a.cols(), b.cols());
  for (std::size_t p = 0; p < a.rows(); ++p) {
    const auto brow = b.row(p);
    for (std::size_t i = 0; i < a.cols(); ++i) {
      const double s = a(p, i);
      if (s != 0.0) k.axpy(s, brow, c.row(i));
    }
  }
  check_finite(c, "matmul_tn result");
  return c;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  require(a.cols() == b.cols(), "matmul_nt: " + shape(a) + " times " + shape(b) + "^T");
  const auto& k = kernels::active();
  Matrix c(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < b.rows(); ++j) c(i, j) = k.dot(a.row(i), b.row(j));
  }
  check_finite(c, "matmul_nt result");
  return c;
}

Matrix transpose(const Matrix& a) {
  Matrix t(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  return t;
}

Matrix operator+(const Matrix& a, const Matrix& b) {
  require(a.same_shape(b), "add: " + shape(a) + " vs " + shape(b));
  Matrix c = a;
  kernels::active().axpy(1.0, b.values(), c.values());
  check_finite(c, "matrix sum");
  return c;
}

Matrix operator-(const Matrix& a, const Matrix& b) {
  require(a.same_shape(b), "sub: " + shape(a) + " vs " + shape(b));
  Matrix c = a;
  kernels::active().axpy(-1.0, b.values(), c.values());
  check_finite(c, "matrix difference");
  return c;
}

Matrix operator*(double s, const Matrix& a) {
  Matrix c = a;
  for (double& v : c.values()) v *= s;
  check_finite(c, "scaled matrix");
  return c;
}

Matrix hadamard(const Matrix& a, const Matrix& b) {
  require(a.same_shape(b), "hadamard: " + shape(a) + " vs " + shape(b));
  Matrix c = a;
  auto cv = c.values();
  auto bv = b.values();
  for (std::size_t i = 0; i < cv.size(); ++i) cv[i] *= bv[i];
  check_finite(c, "hadamard product");
  return c;
}

double frobenius_sq(const Matrix& a) {
  double acc = 0.0;
  for (double v : a.values()) acc += v * v;
  return acc;
}

double sum(const Matrix& a) {
  double acc = 0.0;
  for (double v : a.values()) acc += v;
  return acc;
}

}  // namespace adarank
