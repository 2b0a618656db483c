#include <gtest/gtest.h>

#include <vector>

#include "landscape/error.hpp"
#include "landscape/matrix.hpp"
#include "landscape/random.hpp"

using namespace landscape;

TEST(Matrix, ConstructionAndAccess) {
  Matrix m{{1, 2, 3}, {4, 5, 6}};
  EXPECT_EQ(m.rows(), 2u);
  EXPECT_EQ(m.cols(), 3u);
  EXPECT_EQ(m(1, 2), 6.0);
  EXPECT_EQ(m.column(1), (std::vector<double>{2, 5}));
  EXPECT_EQ(m.transpose()(2, 0), 3.0);
}

TEST(Matrix, RaggedInitializerIsRejected) {
  EXPECT_THROW((Matrix{{1, 2}, {3}}), DimensionError);
}

TEST(Matrix, ProductsAgree) {
  auto rng = make_generator(3);
  const Matrix a = gaussian_matrix(4, 3, rng);
  const Matrix b = gaussian_matrix(4, 5, rng);
  const Matrix c = gaussian_matrix(5, 3, rng);
  EXPECT_LE(max_abs_diff(transpose_times(a, b), a.transpose() * b), 1e-13);
  EXPECT_LE(max_abs_diff(times_transpose(b, c.transpose()), b * c), 1e-13);
  EXPECT_THROW(a * a, DimensionError);
}

TEST(Matrix, Norms) {
  Matrix m{{3, 0}, {0, -4}};
  EXPECT_DOUBLE_EQ(frobenius_norm(m), 5.0);
  EXPECT_DOUBLE_EQ(frobenius_norm_squared(m), 25.0);
  EXPECT_DOUBLE_EQ(max_abs(m), 4.0);
  EXPECT_DOUBLE_EQ(trace(m), -1.0);
  EXPECT_DOUBLE_EQ(frobenius_distance_squared(m, Matrix(2, 2)), 25.0);
}

TEST(Matrix, Blocks) {
  Matrix m = Matrix::identity(4);
  Matrix b{{7, 8}, {9, 10}};
  m.set_block(1, 2, b);
  EXPECT_EQ(m.block(1, 2, 2, 2), b);
  EXPECT_EQ(m.left_columns(1).rows(), 4u);
  EXPECT_THROW(m.block(3, 3, 2, 2), DimensionError);
}

TEST(Matrix, RectangularDiagonal) {
  const std::vector<double> v{2, 1};
  const Matrix d = Matrix::diagonal(3, 2, v);
  EXPECT_EQ(d(0, 0), 2.0);
  EXPECT_EQ(d(1, 1), 1.0);
  EXPECT_EQ(d(2, 1), 0.0);
}

TEST(Matrix, FiniteChecks) {
  Matrix m(2, 2);
  EXPECT_NO_THROW(require_finite(m, "m"));
  m(0, 1) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_FALSE(m.all_finite());
  EXPECT_THROW(require_finite(m, "m"), NonFiniteError);
  EXPECT_THROW(require_same_shape(Matrix(2, 2), Matrix(2, 3), "x"), DimensionError);
}
