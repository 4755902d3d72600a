#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

namespace deepcam {

template <typename Scalar>
using RowMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using RowMatrixXf = RowMatrix<float>;
using RowMatrixXd = RowMatrix<double>;

struct Dims {
  std::uint32_t c = 0;
  std::uint32_t h = 0;
  std::uint32_t w = 0;

  std::size_t size() const noexcept { return std::size_t{c} * h * w; }
  friend bool operator==(const Dims&, const Dims&) = default;
};

std::string to_string(const Dims& d);

/// Dense (C, H, W) activation stored row-major (channel, row, column).
struct ActivationTensor {
  Dims dims;
  Eigen::VectorXd values;

  ActivationTensor() = default;
  ActivationTensor(Dims d, Eigen::VectorXd v);
  explicit ActivationTensor(Dims d) : dims(d), values(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d.size()))) {}

  double& at(std::size_t c, std::size_t y, std::size_t x) {
    return values[static_cast<Eigen::Index>((c * dims.h + y) * dims.w + x)];
  }
  double at(std::size_t c, std::size_t y, std::size_t x) const {
    return values[static_cast<Eigen::Index>((c * dims.h + y) * dims.w + x)];
  }
};

struct ConvGeometry {
  std::uint32_t in_c = 1;
  std::uint32_t kernel_h = 1;
  std::uint32_t kernel_w = 1;
  std::uint32_t stride = 1;
  std::uint32_t pad = 0;

  std::uint32_t patch_length() const noexcept { return in_c * kernel_h * kernel_w; }
  /// Output spatial dims for an input of `in`; throws DimensionError when
  /// the window never fits or the channel count disagrees.
  Dims output_dims(const Dims& in, std::uint32_t out_c) const;

  friend bool operator==(const ConvGeometry&, const ConvGeometry&) = default;
};

/// Convolution. Kernels are stored one per row, flattened (C, R, S).
struct Conv2d {
  ConvGeometry geometry;
  std::uint32_t out_c = 0;
  RowMatrixXf weights;
  std::optional<Eigen::VectorXf> bias;
  bool fused_relu = false;

  friend bool operator==(const Conv2d&, const Conv2d&);
};

/// Fully connected; flattens any input. Weights are (out, in).
struct Linear {
  std::uint32_t in_features = 0;
  std::uint32_t out_features = 0;
  RowMatrixXf weights;
  std::optional<Eigen::VectorXf> bias;
  bool fused_relu = false;

  friend bool operator==(const Linear&, const Linear&);
};

struct Relu {
  friend bool operator==(const Relu&, const Relu&) = default;
};

struct MaxPool {
  std::uint32_t window = 2;
  std::uint32_t stride = 2;
  friend bool operator==(const MaxPool&, const MaxPool&) = default;
};

struct AvgPool {
  std::uint32_t window = 2;
  std::uint32_t stride = 2;
  friend bool operator==(const AvgPool&, const AvgPool&) = default;
};

/// y = gamma * (x - mean) / sqrt(var + eps) + beta, per channel.
struct BatchNorm {
  std::uint32_t channels = 0;
  float eps = 1e-5f;
  Eigen::VectorXf gamma, beta, mean, var;

  friend bool operator==(const BatchNorm&, const BatchNorm&);
};

struct Flatten {
  friend bool operator==(const Flatten&, const Flatten&) = default;
};

/// Full-precision residual add of an earlier layer's output (or the network
/// input when source == kNetworkInput).
struct Add {
  static constexpr std::uint32_t kNetworkInput = 0xFFFFFFFFu;
  std::uint32_t source = kNetworkInput;
  friend bool operator==(const Add&, const Add&) = default;
};

using LayerDescriptor = std::variant<Conv2d, Linear, Relu, MaxPool, AvgPool, BatchNorm, Flatten, Add>;

const char* layer_kind_name(const LayerDescriptor& layer) noexcept;
bool is_dot_layer(const LayerDescriptor& layer) noexcept;

struct NetworkModel {
  Dims input;
  std::vector<LayerDescriptor> layers;

  /// Output dims of every layer, validating shapes along the way.
  std::vector<Dims> infer_dims() const;
  /// Indices of conv2d/linear layers in execution order.
  std::vector<std::size_t> dot_layers() const;

  friend bool operator==(const NetworkModel&, const NetworkModel&) = default;
};

}  // namespace deepcam
