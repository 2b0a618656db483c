#pragma once
// The deep linear network L(W) = ½‖W_H⋯W_1·X − Y‖_F².
//
// Layers are stored 0-based: layers()[l] is W_{l+1}, with shape
// d_{l+1} × d_l. Parameters are flattened layer by layer and row-major
// within a layer; hessian() and WeightStack::flatten() share that order.

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "landscape/matrix.hpp"

namespace landscape {

inline constexpr std::size_t kMaxHessianParameters = 2000;

class NetworkDims {
 public:
  /// Needs at least two positive widths (d_0 … d_H).
  explicit NetworkDims(std::vector<std::size_t> widths);
  /// Parses "4,3,2,3,4".
  static NetworkDims parse(const std::string& text);

  const std::vector<std::size_t>& widths() const noexcept { return widths_; }
  std::size_t depth() const noexcept { return widths_.size() - 1; }
  std::size_t width(std::size_t i) const { return widths_.at(i); }
  std::size_t input_width() const noexcept { return widths_.front(); }
  std::size_t output_width() const noexcept { return widths_.back(); }
  /// p: first index of a minimal width.
  std::size_t bottleneck_index() const noexcept { return bottleneck_; }
  std::size_t bottleneck_width() const noexcept { return widths_[bottleneck_]; }
  std::size_t parameter_count() const noexcept;
  std::string to_string() const;

  friend bool operator==(const NetworkDims&, const NetworkDims&) = default;

 private:
  std::vector<std::size_t> widths_;
  std::size_t bottleneck_ = 0;
};

class WeightStack {
 public:
  /// Empty placeholder (depth 0); every real stack has at least one layer.
  WeightStack() = default;
  /// DimensionError unless layer l's column count equals layer l−1's row count.
  explicit WeightStack(std::vector<Matrix> layers);

  static WeightStack zeros(const NetworkDims& dims);
  static WeightStack unflatten(const NetworkDims& dims, std::span<const double> params);

  const std::vector<Matrix>& layers() const noexcept { return layers_; }
  const Matrix& layer(std::size_t l) const { return layers_.at(l); }
  std::size_t depth() const noexcept { return layers_.size(); }
  NetworkDims dims() const;
  std::size_t parameter_count() const noexcept;

  /// Copy with layer l replaced; the new matrix must have the same shape.
  WeightStack with_layer(std::size_t l, Matrix m) const;
  std::vector<double> flatten() const;

  friend bool operator==(const WeightStack&, const WeightStack&) = default;

 private:
  std::vector<Matrix> layers_;
};

/// Training data with the full-row-rank hypotheses checked up front.
class Dataset {
 public:
  /// PreconditionError if X or Y is not full row rank or m < max(d_0, d_H).
  Dataset(Matrix x, Matrix y);

  const Matrix& X() const noexcept { return x_; }
  const Matrix& Y() const noexcept { return y_; }
  std::size_t samples() const noexcept { return x_.cols(); }

 private:
  Matrix x_;
  Matrix y_;
};

using LayerGradients = std::vector<Matrix>;

/// W_H⋯W_1, multiplied right to left.
Matrix product(const WeightStack& w);
/// W_{hi}⋯W_{lo} (0-based, inclusive). An empty range (hi < lo) yields the
/// identity of size d_lo.
Matrix partial_product(const WeightStack& w, std::size_t lo, std::ptrdiff_t hi);

double loss(const WeightStack& w, const Dataset& data);
LayerGradients gradient(const WeightStack& w, const Dataset& data);
/// ∂/∂W_l of ½‖E‖² for a residual E = W_H⋯W_1·X − Y already in hand; used by
/// objectives that reshape the residual (masking).
LayerGradients gradient_from_residual(const WeightStack& w, const Matrix& x, const Matrix& residual);
double gradient_norm(const LayerGradients& g);

/// Dense Hessian in the flattening order. SizeError above
/// kMaxHessianParameters.
Matrix hessian(const WeightStack& w, const Dataset& data);

void require_conforming(const WeightStack& w, const Dataset& data);

/// Weight directory: dims.txt (comma list d_0…d_H) plus layer_1.txt …
/// layer_H.txt in the matrix text format.
void save_weights(const std::filesystem::path& dir, const WeightStack& w);
WeightStack load_weights(const std::filesystem::path& dir);
/// Data directory: X.txt and Y.txt.
void save_dataset(const std::filesystem::path& dir, const Dataset& data);
Dataset load_dataset(const std::filesystem::path& dir);

}  // namespace landscape
