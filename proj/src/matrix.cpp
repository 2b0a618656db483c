#include "landscape/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "landscape/error.hpp"
#include "landscape/kernels.hpp"

namespace landscape {
namespace {

std::string shape(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> entries)
    : rows_(rows), cols_(cols), data_(std::move(entries)) {
  if (data_.size() != rows * cols) {
    throw DimensionError("matrix entry count " + std::to_string(data_.size()) +
                         " does not match " + std::to_string(rows) + "x" +
                         std::to_string(cols));
  }
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ == 0 ? 0 : rows.begin()->size();
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw DimensionError("ragged matrix literal");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::diagonal(std::span<const double> values) {
  return diagonal(values.size(), values.size(), values);
}

Matrix Matrix::diagonal(std::size_t rows, std::size_t cols, std::span<const double> values) {
  Matrix m(rows, cols);
  const std::size_t n = std::min({rows, cols, values.size()});
  for (std::size_t i = 0; i < n; ++i) m(i, i) = values[i];
  return m;
}

Matrix Matrix::column_vector(std::span<const double> values) {
  return Matrix(values.size(), 1, std::vector<double>(values.begin(), values.end()));
}

std::vector<double> Matrix::column(std::size_t c) const {
  std::vector<double> out(rows_);
  for (std::size_t r = 0; r < rows_; ++r) out[r] = (*this)(r, c);
  return out;
}

void Matrix::set_column(std::size_t c, std::span<const double> values) {
  if (values.size() != rows_) throw DimensionError("set_column: length mismatch");
  for (std::size_t r = 0; r < rows_; ++r) (*this)(r, c) = values[r];
}

Matrix Matrix::transpose() const {
  Matrix t(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
  return t;
}

Matrix Matrix::block(std::size_t r0, std::size_t c0, std::size_t nr, std::size_t nc) const {
  if (r0 + nr > rows_ || c0 + nc > cols_) {
    throw DimensionError("block out of range of " + shape(*this));
  }
  Matrix b(nr, nc);
  for (std::size_t r = 0; r < nr; ++r)
    std::copy_n(data_.data() + (r0 + r) * cols_ + c0, nc, b.data() + r * nc);
  return b;
}

void Matrix::set_block(std::size_t r0, std::size_t c0, const Matrix& b) {
  if (r0 + b.rows() > rows_ || c0 + b.cols() > cols_) {
    throw DimensionError("set_block out of range of " + shape(*this));
  }
  for (std::size_t r = 0; r < b.rows(); ++r)
    std::copy_n(b.data() + r * b.cols(), b.cols(), data_.data() + (r0 + r) * cols_ + c0);
}

bool Matrix::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

Matrix& Matrix::operator+=(const Matrix& o) {
  require_same_shape(*this, o, "matrix addition");
  kernels::axpy(1.0, o.data(), data(), size());
  return *this;
}

Matrix& Matrix::operator-=(const Matrix& o) {
  require_same_shape(*this, o, "matrix subtraction");
  kernels::axpy(-1.0, o.data(), data(), size());
  return *this;
}

Matrix& Matrix::operator*=(double s) {
  for (double& v : data_) v *= s;
  return *this;
}

Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
Matrix operator*(Matrix a, double s) { return a *= s; }
Matrix operator*(double s, Matrix a) { return a *= s; }
Matrix operator-(Matrix a) { return a *= -1.0; }

Matrix operator*(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw DimensionError("cannot multiply " + shape(a) + " by " + shape(b));
  }
  Matrix c(a.rows(), b.cols());
  if (c.empty()) return c;
  kernels::gemm(a.rows(), b.cols(), a.cols(), a.data(), b.data(), c.data());
  return c;
}

Matrix transpose_times(const Matrix& a, const Matrix& b) { return a.transpose() * b; }

Matrix times_transpose(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) {
    throw DimensionError("cannot form A*B^T for " + shape(a) + " and " + shape(b));
  }
  // Rows of both operands are contiguous, so every entry is one dot product.
  Matrix c(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.rows(); ++j)
      c(i, j) = kernels::dot(a.row(i).data(), b.row(j).data(), a.cols());
  return c;
}

double frobenius_norm_squared(const Matrix& m) { return kernels::sum_squares(m.data(), m.size()); }

double frobenius_norm(const Matrix& m) {
  // Scale first so very large or tiny entries do not overflow/underflow.
  const double s = max_abs(m);
  if (s == 0.0) return 0.0;
  const Matrix scaled = m * (1.0 / s);
  return s * std::sqrt(frobenius_norm_squared(scaled));
}

double frobenius_distance_squared(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "frobenius distance");
  return kernels::sum_sq_diff(a.data(), b.data(), a.size());
}

double max_abs(const Matrix& m) {
  double best = 0.0;
  for (double v : m.values()) best = std::max(best, std::abs(v));
  return best;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "max_abs_diff");
  double best = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) best = std::max(best, std::abs(a.data()[i] - b.data()[i]));
  return best;
}

double trace(const Matrix& m) {
  double t = 0.0;
  for (std::size_t i = 0; i < std::min(m.rows(), m.cols()); ++i) t += m(i, i);
  return t;
}

void require_finite(const Matrix& m, const char* what) {
  if (!m.all_finite()) throw NonFiniteError(std::string(what) + " contains NaN or Inf");
}

void require_same_shape(const Matrix& a, const Matrix& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError(std::string(what) + ": shape " + shape(a) + " vs " + shape(b));
  }
}

}  // namespace landscape
