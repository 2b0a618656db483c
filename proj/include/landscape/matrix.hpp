#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace landscape {

/// Dense row-major matrix of doubles with value semantics.
///
/// Zero-sized matrices are allowed as intermediates (an empty block, a rank-0
/// factor); the domain types that need positive sizes check for it.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> entries);
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix zeros(std::size_t rows, std::size_t cols) { return Matrix(rows, cols); }
  static Matrix identity(std::size_t n);
  static Matrix diagonal(std::span<const double> values);
  static Matrix diagonal(std::size_t rows, std::size_t cols, std::span<const double> values);
  static Matrix column_vector(std::span<const double> values);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  double* data() noexcept { return data_.data(); }
  const double* data() const noexcept { return data_.data(); }
  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }
  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::vector<double> column(std::size_t c) const;
  void set_column(std::size_t c, std::span<const double> values);

  Matrix transpose() const;
  Matrix block(std::size_t r0, std::size_t c0, std::size_t nr, std::size_t nc) const;
  void set_block(std::size_t r0, std::size_t c0, const Matrix& b);
  /// Leading `n` columns.
  Matrix left_columns(std::size_t n) const { return block(0, 0, rows_, n); }

  bool all_finite() const noexcept;

  Matrix& operator+=(const Matrix& o);
  Matrix& operator-=(const Matrix& o);
  Matrix& operator*=(double s);

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix operator+(Matrix a, const Matrix& b);
Matrix operator-(Matrix a, const Matrix& b);
Matrix operator*(Matrix a, double s);
Matrix operator*(double s, Matrix a);
Matrix operator-(Matrix a);

/// Matrix product; DimensionError on a shape mismatch.
Matrix operator*(const Matrix& a, const Matrix& b);

/// Aᵀ·B without forming the transpose.
Matrix transpose_times(const Matrix& a, const Matrix& b);
/// A·Bᵀ without forming the transpose.
Matrix times_transpose(const Matrix& a, const Matrix& b);

double frobenius_norm(const Matrix& m);
double frobenius_norm_squared(const Matrix& m);
/// ‖A − B‖_F², shapes must match.
double frobenius_distance_squared(const Matrix& a, const Matrix& b);
/// Largest absolute entry (the entrywise ∞-norm used for "perturbation" sizes).
double max_abs(const Matrix& m);
double max_abs_diff(const Matrix& a, const Matrix& b);
double trace(const Matrix& m);

/// Throws NonFiniteError naming `what` if any entry is NaN or infinite.
void require_finite(const Matrix& m, const char* what);
/// Throws DimensionError unless a and b have identical shapes.
void require_same_shape(const Matrix& a, const Matrix& b, const char* what);

}  // namespace landscape
