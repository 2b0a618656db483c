#include "landscape/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "landscape/error.hpp"
#include "landscape/kernels.hpp"
#include "landscape/linalg.hpp"
#include "landscape/matrix_io.hpp"

namespace landscape {
namespace {

// A_l = W_{l-1}⋯W_0·X for l = 0…H (A_H is the network output).
std::vector<Matrix> forward_activations(const WeightStack& w, const Matrix& x) {
  std::vector<Matrix> acts;
  acts.reserve(w.depth() + 1);
  acts.push_back(x);
  for (const Matrix& layer : w.layers()) acts.push_back(layer * acts.back());
  return acts;
}

// B_l = W_{H-1}⋯W_{l+1} for l = 0…H−1 (B_{H-1} is the identity).
std::vector<Matrix> suffix_products(const WeightStack& w) {
  const std::size_t h = w.depth();
  std::vector<Matrix> suffix(h);
  suffix[h - 1] = Matrix::identity(w.layer(h - 1).rows());
  for (std::size_t l = h - 1; l-- > 0;) suffix[l] = suffix[l + 1] * w.layer(l + 1);
  return suffix;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot read " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

}  // namespace

NetworkDims::NetworkDims(std::vector<std::size_t> widths) : widths_(std::move(widths)) {
  if (widths_.size() < 2) throw PreconditionError("network needs at least two widths (d_0 and d_H)");
  if (std::any_of(widths_.begin(), widths_.end(), [](std::size_t d) { return d == 0; })) {
    throw PreconditionError("network widths must be positive");
  }
  bottleneck_ = static_cast<std::size_t>(
      std::min_element(widths_.begin(), widths_.end()) - widths_.begin());
}

NetworkDims NetworkDims::parse(const std::string& text) {
  std::vector<std::size_t> widths;
  std::stringstream ss(text);
  std::string field;
  while (std::getline(ss, field, ',')) {
    const auto b = field.find_first_not_of(" \t\r\n");
    const auto e = field.find_last_not_of(" \t\r\n");
    if (b == std::string::npos) throw PreconditionError("empty width in '" + text + "'");
    field = field.substr(b, e - b + 1);
    std::size_t used = 0;
    long long v = 0;
    try {
      v = std::stoll(field, &used);
    } catch (const std::exception&) {
      throw PreconditionError("invalid width '" + field + "'");
    }
    if (used != field.size() || v <= 0) throw PreconditionError("invalid width '" + field + "'");
    widths.push_back(static_cast<std::size_t>(v));
  }
  return NetworkDims(std::move(widths));
}

std::size_t NetworkDims::parameter_count() const noexcept {
  std::size_t n = 0;
  for (std::size_t i = 1; i < widths_.size(); ++i) n += widths_[i] * widths_[i - 1];
  return n;
}

std::string NetworkDims::to_string() const {
  std::string s;
  for (std::size_t i = 0; i < widths_.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(widths_[i]);
  }
  return s;
}

WeightStack::WeightStack(std::vector<Matrix> layers) : layers_(std::move(layers)) {
  if (layers_.empty()) throw DimensionError("weight stack needs at least one layer");
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    if (layers_[l].rows() == 0 || layers_[l].cols() == 0) {
      throw DimensionError("layer " + std::to_string(l + 1) + " has a zero dimension");
    }
    require_finite(layers_[l], "weight layer");
    if (l > 0 && layers_[l].cols() != layers_[l - 1].rows()) {
      throw DimensionError("layer " + std::to_string(l + 1) + " has " +
                           std::to_string(layers_[l].cols()) + " columns but layer " +
                           std::to_string(l) + " has " + std::to_string(layers_[l - 1].rows()) +
                           " rows");
    }
  }
}

WeightStack WeightStack::zeros(const NetworkDims& dims) {
  std::vector<Matrix> layers;
  for (std::size_t l = 0; l < dims.depth(); ++l) layers.emplace_back(dims.width(l + 1), dims.width(l));
  return WeightStack(std::move(layers));
}

WeightStack WeightStack::unflatten(const NetworkDims& dims, std::span<const double> params) {
  if (params.size() != dims.parameter_count()) {
    throw DimensionError("unflatten: expected " + std::to_string(dims.parameter_count()) +
                         " parameters, got " + std::to_string(params.size()));
  }
  std::vector<Matrix> layers;
  std::size_t offset = 0;
  for (std::size_t l = 0; l < dims.depth(); ++l) {
    const std::size_t r = dims.width(l + 1);
    const std::size_t c = dims.width(l);
    layers.emplace_back(r, c, std::vector<double>(params.begin() + offset, params.begin() + offset + r * c));
    offset += r * c;
  }
  return WeightStack(std::move(layers));
}

NetworkDims WeightStack::dims() const {
  if (layers_.empty()) throw DimensionError("empty weight stack has no dimensions");
  std::vector<std::size_t> widths{layers_.front().cols()};
  for (const Matrix& m : layers_) widths.push_back(m.rows());
  return NetworkDims(std::move(widths));
}

std::size_t WeightStack::parameter_count() const noexcept {
  std::size_t n = 0;
  for (const Matrix& m : layers_) n += m.size();
  return n;
}

WeightStack WeightStack::with_layer(std::size_t l, Matrix m) const {
  require_same_shape(layers_.at(l), m, "with_layer");
  std::vector<Matrix> layers = layers_;
  layers[l] = std::move(m);
  return WeightStack(std::move(layers));
}

std::vector<double> WeightStack::flatten() const {
  std::vector<double> out;
  out.reserve(parameter_count());
  for (const Matrix& m : layers_) out.insert(out.end(), m.values().begin(), m.values().end());
  return out;
}

Dataset::Dataset(Matrix x, Matrix y) : x_(std::move(x)), y_(std::move(y)) {
  if (x_.empty() || y_.empty()) throw DimensionError("dataset matrices must be non-empty");
  if (x_.cols() != y_.cols()) {
    throw DimensionError("X has " + std::to_string(x_.cols()) + " samples but Y has " +
                         std::to_string(y_.cols()));
  }
  require_finite(x_, "X");
  require_finite(y_, "Y");
  if (x_.cols() < std::max(x_.rows(), y_.rows())) {
    throw PreconditionError("sample count m must be at least max(d_0, d_H)");
  }
  if (numerical_rank(x_) != x_.rows()) throw PreconditionError("X does not have full row rank");
  if (numerical_rank(y_) != y_.rows()) throw PreconditionError("Y does not have full row rank");
}

Matrix product(const WeightStack& w) {
  Matrix r = w.layer(0);
  for (std::size_t l = 1; l < w.depth(); ++l) r = w.layer(l) * r;
  return r;
}

Matrix partial_product(const WeightStack& w, std::size_t lo, std::ptrdiff_t hi) {
  if (hi < static_cast<std::ptrdiff_t>(lo)) {
    const std::size_t n = lo < w.depth() ? w.layer(lo).cols() : w.layer(w.depth() - 1).rows();
    return Matrix::identity(n);
  }
  Matrix r = w.layer(lo);
  for (std::size_t l = lo + 1; l <= static_cast<std::size_t>(hi); ++l) r = w.layer(l) * r;
  return r;
}

void require_conforming(const WeightStack& w, const Dataset& data) {
  if (w.layer(0).cols() != data.X().rows()) {
    throw DimensionError("first layer expects " + std::to_string(w.layer(0).cols()) +
                         " inputs but X has " + std::to_string(data.X().rows()) + " rows");
  }
  if (w.layer(w.depth() - 1).rows() != data.Y().rows()) {
    throw DimensionError("last layer produces " + std::to_string(w.layer(w.depth() - 1).rows()) +
                         " outputs but Y has " + std::to_string(data.Y().rows()) + " rows");
  }
}

double loss(const WeightStack& w, const Dataset& data) {
  require_conforming(w, data);
  Matrix out = data.X();
  for (const Matrix& layer : w.layers()) out = layer * out;
  return 0.5 * frobenius_distance_squared(out, data.Y());
}

LayerGradients gradient_from_residual(const WeightStack& w, const Matrix& x, const Matrix& residual) {
  const std::vector<Matrix> acts = forward_activations(w, x);
  const std::vector<Matrix> suffix = suffix_products(w);
  LayerGradients g(w.depth());
  for (std::size_t l = 0; l < w.depth(); ++l) {
    g[l] = times_transpose(transpose_times(suffix[l], residual), acts[l]);
  }
  return g;
}

LayerGradients gradient(const WeightStack& w, const Dataset& data) {
  require_conforming(w, data);
  const std::vector<Matrix> acts = forward_activations(w, data.X());
  const std::vector<Matrix> suffix = suffix_products(w);
  const Matrix residual = acts.back() - data.Y();
  LayerGradients g(w.depth());
  for (std::size_t l = 0; l < w.depth(); ++l) {
    g[l] = times_transpose(transpose_times(suffix[l], residual), acts[l]);
  }
  return g;
}

double gradient_norm(const LayerGradients& g) {
  double s = 0.0;
  for (const Matrix& m : g) s += frobenius_norm_squared(m);
  return std::sqrt(s);
}

Matrix hessian(const WeightStack& w, const Dataset& data) {
  require_conforming(w, data);
  const std::size_t n = w.parameter_count();
  if (n > kMaxHessianParameters) {
    throw SizeError("hessian: " + std::to_string(n) + " parameters exceeds the limit of " +
                    std::to_string(kMaxHessianParameters));
  }
  const std::size_t h = w.depth();
  const std::vector<Matrix> acts = forward_activations(w, data.X());
  const std::vector<Matrix> suffix = suffix_products(w);
  const Matrix residual = acts.back() - data.Y();

  std::vector<std::size_t> offset(h + 1, 0);
  for (std::size_t l = 0; l < h; ++l) offset[l + 1] = offset[l] + w.layer(l).size();

  Matrix hess(n, n);
  for (std::size_t l = 0; l < h; ++l) {
    const std::size_t rows_l = w.layer(l).rows();
    const std::size_t cols_l = w.layer(l).cols();
    for (std::size_t j = l; j < h; ++j) {
      const std::size_t rows_j = w.layer(j).rows();
      const std::size_t cols_j = w.layer(j).cols();
      // Gauss–Newton part: ⟨∂E/∂W_l[a,b], ∂E/∂W_j[c,d]⟩.
      const Matrix bb = transpose_times(suffix[l], suffix[j]);  // rows_l × rows_j
      const Matrix aa = times_transpose(acts[l], acts[j]);      // cols_l × cols_j
      // Curvature of the product: ⟨E, ∂²E/∂W_l[a,b]∂W_j[c,d]⟩ for l < j equals
      // mid[d,a]·(B_jᵀ·E·A_lᵀ)[c,b], with mid = W_{j-1}⋯W_{l+1}.
      Matrix mid;
      Matrix coupling;
      if (j > l) {
        mid = partial_product(w, l + 1, static_cast<std::ptrdiff_t>(j) - 1);
        coupling = times_transpose(transpose_times(suffix[j], residual), acts[l]);
      }
      for (std::size_t a = 0; a < rows_l; ++a) {
        for (std::size_t b = 0; b < cols_l; ++b) {
          const std::size_t row = offset[l] + a * cols_l + b;
          for (std::size_t c = 0; c < rows_j; ++c) {
            for (std::size_t d = 0; d < cols_j; ++d) {
              const std::size_t col = offset[j] + c * cols_j + d;
              double v = bb(a, c) * aa(b, d);
              if (j > l) v += mid(d, a) * coupling(c, b);
              hess(row, col) = v;
              hess(col, row) = v;
            }
          }
        }
      }
    }
  }
  return hess;
}

void save_weights(const std::filesystem::path& dir, const WeightStack& w) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  {
    std::ofstream os(dir / "dims.txt");
    if (!os) throw IoError("cannot write " + (dir / "dims.txt").string());
    os << w.dims().to_string() << '\n';
  }
  for (std::size_t l = 0; l < w.depth(); ++l) {
    io::save_matrix(dir / ("layer_" + std::to_string(l + 1) + ".txt"), w.layer(l));
  }
}

WeightStack load_weights(const std::filesystem::path& dir) {
  const NetworkDims dims = NetworkDims::parse(read_text(dir / "dims.txt"));
  std::vector<Matrix> layers;
  for (std::size_t l = 0; l < dims.depth(); ++l) {
    Matrix m = io::load_matrix(dir / ("layer_" + std::to_string(l + 1) + ".txt"));
    if (m.rows() != dims.width(l + 1) || m.cols() != dims.width(l)) {
      throw DimensionError("layer_" + std::to_string(l + 1) + " shape disagrees with dims.txt");
    }
    layers.push_back(std::move(m));
  }
  return WeightStack(std::move(layers));
}

void save_dataset(const std::filesystem::path& dir, const Dataset& data) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  io::save_matrix(dir / "X.txt", data.X());
  io::save_matrix(dir / "Y.txt", data.Y());
}

Dataset load_dataset(const std::filesystem::path& dir) {
  return Dataset(io::load_matrix(dir / "X.txt"), io::load_matrix(dir / "Y.txt"));
}

}  // namespace landscape
