#include "deepcam/network.hpp"

#include "deepcam/error.hpp"

namespace deepcam {

namespace {

template <typename T>
bool same_optional(const std::optional<T>& a, const std::optional<T>& b) {
  if (a.has_value() != b.has_value()) return false;
  return !a || *a == *b;
}

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};

Dims pooled(const Dims& in, std::uint32_t window, std::uint32_t stride, const char* what) {
  if (window == 0 || stride == 0) throw DimensionError(std::string(what) + ": window and stride must be >= 1");
  if (window > in.h || window > in.w)
    throw DimensionError(std::string(what) + ": window " + std::to_string(window) +
                         " larger than input " + to_string(in));
  return {in.c, (in.h - window) / stride + 1, (in.w - window) / stride + 1};
}

}  // namespace

std::string to_string(const Dims& d) {
  return std::to_string(d.c) + "x" + std::to_string(d.h) + "x" + std::to_string(d.w);
}

ActivationTensor::ActivationTensor(Dims d, Eigen::VectorXd v) : dims(d), values(std::move(v)) {
  if (static_cast<std::size_t>(values.size()) != dims.size())
    throw DimensionError("ActivationTensor: " + std::to_string(values.size()) + " values for dims " +
                         to_string(dims));
}

Dims ConvGeometry::output_dims(const Dims& in, std::uint32_t out_c) const {
  if (in.c != in_c)
    throw DimensionError("conv: input has " + std::to_string(in.c) + " channels, kernel expects " +
                         std::to_string(in_c));
  if (stride == 0 || kernel_h == 0 || kernel_w == 0)
    throw DimensionError("conv: kernel dims and stride must be >= 1");
  const std::uint64_t ph = std::uint64_t{in.h} + 2 * pad;
  const std::uint64_t pw = std::uint64_t{in.w} + 2 * pad;
  if (kernel_h > ph || kernel_w > pw)
    throw DimensionError("conv: kernel " + std::to_string(kernel_h) + "x" + std::to_string(kernel_w) +
                         " does not fit padded input " + to_string(in));
  if (stride > ph || stride > pw)
    throw DimensionError("conv: stride " + std::to_string(stride) + " larger than input " + to_string(in));
  return {out_c, static_cast<std::uint32_t>((ph - kernel_h) / stride + 1),
          static_cast<std::uint32_t>((pw - kernel_w) / stride + 1)};
}

bool operator==(const Conv2d& a, const Conv2d& b) {
  return a.geometry == b.geometry && a.out_c == b.out_c && a.fused_relu == b.fused_relu &&
         a.weights.rows() == b.weights.rows() && a.weights.cols() == b.weights.cols() &&
         a.weights == b.weights && same_optional(a.bias, b.bias);
}

bool operator==(const Linear& a, const Linear& b) {
  return a.in_features == b.in_features && a.out_features == b.out_features &&
         a.fused_relu == b.fused_relu && a.weights.rows() == b.weights.rows() &&
         a.weights.cols() == b.weights.cols() && a.weights == b.weights && same_optional(a.bias, b.bias);
}

bool operator==(const BatchNorm& a, const BatchNorm& b) {
  auto eq = [](const Eigen::VectorXf& x, const Eigen::VectorXf& y) { return x.size() == y.size() && x == y; };
  return a.channels == b.channels && a.eps == b.eps && eq(a.gamma, b.gamma) && eq(a.beta, b.beta) &&
         eq(a.mean, b.mean) && eq(a.var, b.var);
}

const char* layer_kind_name(const LayerDescriptor& layer) noexcept {
  return std::visit(Overloaded{
                        [](const Conv2d&) { return "conv2d"; },
                        [](const Linear&) { return "linear"; },
                        [](const Relu&) { return "relu"; },
                        [](const MaxPool&) { return "maxpool"; },
                        [](const AvgPool&) { return "avgpool"; },
                        [](const BatchNorm&) { return "batchnorm"; },
                        [](const Flatten&) { return "flatten"; },
                        [](const Add&) { return "add"; },
                    },
                    layer);
}

bool is_dot_layer(const LayerDescriptor& layer) noexcept {
  return std::holds_alternative<Conv2d>(layer) || std::holds_alternative<Linear>(layer);
}

std::vector<std::size_t> NetworkModel::dot_layers() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < layers.size(); ++i)
    if (is_dot_layer(layers[i])) out.push_back(i);
  return out;
}

std::vector<Dims> NetworkModel::infer_dims() const {
  if (input.size() == 0) throw DimensionError("model input dims must be non-zero");
  std::vector<Dims> out;
  out.reserve(layers.size());
  Dims cur = input;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const std::string where = "layer " + std::to_string(i) + " (" + layer_kind_name(layers[i]) + "): ";
    try {
      cur = std::visit(
          Overloaded{
              [&](const Conv2d& l) {
                const Dims o = l.geometry.output_dims(cur, l.out_c);
                if (l.weights.rows() != l.out_c || l.weights.cols() != l.geometry.patch_length())
                  throw DimensionError("weights are " + std::to_string(l.weights.rows()) + "x" +
                                       std::to_string(l.weights.cols()));
                if (l.bias && l.bias->size() != l.out_c) throw DimensionError("bias length mismatch");
                return o;
              },
              [&](const Linear& l) {
                if (cur.size() != l.in_features)
                  throw DimensionError("input has " + std::to_string(cur.size()) + " features, expected " +
                                       std::to_string(l.in_features));
                if (l.weights.rows() != l.out_features || l.weights.cols() != l.in_features)
                  throw DimensionError("weights shape mismatch");
                if (l.bias && l.bias->size() != l.out_features) throw DimensionError("bias length mismatch");
                return Dims{l.out_features, 1, 1};
              },
              [&](const Relu&) { return cur; },
              [&](const MaxPool& l) { return pooled(cur, l.window, l.stride, "maxpool"); },
              [&](const AvgPool& l) { return pooled(cur, l.window, l.stride, "avgpool"); },
              [&](const BatchNorm& l) {
                if (l.channels != cur.c) throw DimensionError("channel count mismatch");
                for (const auto* v : {&l.gamma, &l.beta, &l.mean, &l.var})
                  if (v->size() != l.channels) throw DimensionError("parameter length mismatch");
                return cur;
              },
              [&](const Flatten&) { return Dims{static_cast<std::uint32_t>(cur.size()), 1, 1}; },
              [&](const Add& l) {
                const Dims src = l.source == Add::kNetworkInput ? input
                                 : l.source < i                  ? out[l.source]
                                                                 : throw DimensionError("source must precede the add");
                if (!(src == cur)) throw DimensionError("operand dims " + to_string(src) + " vs " + to_string(cur));
                return cur;
              },
          },
          layers[i]);
    } catch (const DimensionError& e) {
      throw DimensionError(where + e.what());
    }
    out.push_back(cur);
  }
  return out;
}

}  // namespace deepcam
