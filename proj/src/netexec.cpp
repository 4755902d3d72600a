#include "deepcam/netexec.hpp"

#include <algorithm>
#include <limits>
#include <string>

#include "deepcam/error.hpp"
#include "deepcam/parallel.hpp"

namespace deepcam {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};

void log_post_op(CostTrace* trace, std::size_t layer, std::size_t elements) {
  if (!trace) return;
  trace->events.push_back({TraceEvent::Kind::kPostOp, static_cast<std::uint32_t>(layer), 0, 0,
                           static_cast<std::uint32_t>(elements), 0});
}

}  // namespace

ExecutionPlan ExecutionPlan::uniform(const NetworkModel& model, std::size_t k) {
  ExecutionPlan plan;
  plan.hash_lengths.assign(model.dot_layers().size(), k);
  return plan;
}

void ExecutionPlan::validate(const NetworkModel& model) const {
  cam.validate();
  const std::size_t expected = model.dot_layers().size();
  if (hash_lengths.size() != expected)
    throw ConfigError("plan has " + std::to_string(hash_lengths.size()) + " hash lengths, model has " +
                      std::to_string(expected) + " dot-product layers");
  for (std::size_t k : hash_lengths)
    if (!is_allowed_word_bits(k))
      throw ConfigError("hash length " + std::to_string(k) + " not in {256, 512, 768, 1024}");
}

RowMatrixXd im2col(const ActivationTensor& input, const ConvGeometry& g) {
  const Dims out = g.output_dims(input.dims, 1);
  const std::size_t positions = std::size_t{out.h} * out.w;
  RowMatrixXd patches(static_cast<Eigen::Index>(positions), g.patch_length());
  const auto h = static_cast<std::int64_t>(input.dims.h);
  const auto w = static_cast<std::int64_t>(input.dims.w);
  for (std::uint32_t oy = 0; oy < out.h; ++oy) {
    for (std::uint32_t ox = 0; ox < out.w; ++ox) {
      const Eigen::Index p = static_cast<Eigen::Index>(oy) * out.w + ox;
      Eigen::Index col = 0;
      for (std::uint32_t c = 0; c < g.in_c; ++c) {
        for (std::uint32_t r = 0; r < g.kernel_h; ++r) {
          const std::int64_t y = std::int64_t{oy} * g.stride + r - g.pad;
          for (std::uint32_t s = 0; s < g.kernel_w; ++s, ++col) {
            const std::int64_t x = std::int64_t{ox} * g.stride + s - g.pad;
            patches(p, col) = (y >= 0 && y < h && x >= 0 && x < w)
                                  ? input.at(c, static_cast<std::size_t>(y), static_cast<std::size_t>(x))
                                  : 0.0;
          }
        }
      }
    }
  }
  return patches;
}

std::uint64_t layer_seed(std::uint64_t global_seed, std::size_t layer_index) noexcept {
  return splitmix64(global_seed ^ splitmix64(static_cast<std::uint64_t>(layer_index) + 1));
}

ProjectionMatrix layer_projection(std::uint64_t global_seed, std::size_t layer_index,
                                  Eigen::Index n, Eigen::Index k) {
  return ProjectionMatrix(layer_seed(global_seed, layer_index), n, k);
}

std::vector<Context> make_weight_contexts(const RowMatrixXf& kernels, const ProjectionMatrix& c) {
  if (kernels.cols() != c.n())
    throw DimensionError("make_weight_contexts: kernel length " + std::to_string(kernels.cols()) +
                         " vs projection rows " + std::to_string(c.n()));
  std::vector<Context> out;
  out.reserve(static_cast<std::size_t>(kernels.rows()));
  for (Eigen::Index j = 0; j < kernels.rows(); ++j) {
    const Eigen::VectorXd kernel = kernels.row(j).transpose().cast<double>();
    out.push_back(build_context(kernel, c));
  }
  return out;
}

std::vector<Context> make_weight_contexts(const LayerDescriptor& layer, const ProjectionMatrix& c) {
  if (const auto* conv = std::get_if<Conv2d>(&layer)) return make_weight_contexts(conv->weights, c);
  if (const auto* lin = std::get_if<Linear>(&layer)) return make_weight_contexts(lin->weights, c);
  throw ConfigError(std::string("make_weight_contexts: ") + layer_kind_name(layer) +
                    " is not a dot-product layer");
}

Context online_activation_context(const Eigen::Ref<const Eigen::VectorXd>& x,
                                  const ProjectionMatrix& c, std::uint32_t layer,
                                  CostTrace* trace) {
  Context ctx = build_context(x, c);
  if (trace)
    trace->events.push_back({TraceEvent::Kind::kTransform, layer, 0,
                             static_cast<std::uint32_t>(c.k()), 1, 0,
                             static_cast<std::uint32_t>(c.n())});
  return ctx;
}

std::vector<Context> activation_contexts(const RowMatrixXd& patches, const ProjectionMatrix& c,
                                         std::uint32_t layer, bool online, CostTrace* trace) {
  if (patches.cols() != c.n())
    throw DimensionError("activation_contexts: patch length " + std::to_string(patches.cols()) +
                         " vs projection rows " + std::to_string(c.n()));
  const Eigen::MatrixXd proj = patches * c.entries();
  std::vector<Context> out;
  out.reserve(static_cast<std::size_t>(patches.rows()));
  for (Eigen::Index p = 0; p < patches.rows(); ++p) {
    HashBits bits(static_cast<std::size_t>(c.k()));
    for (Eigen::Index j = 0; j < proj.cols(); ++j)
      bits.set(static_cast<std::size_t>(j), proj(p, j) >= 0.0);
    out.push_back(Context{Minifloat8::encode(l2_norm(patches.row(p))), std::move(bits)});
    if (online && trace)
      trace->events.push_back({TraceEvent::Kind::kTransform, layer, 0,
                               static_cast<std::uint32_t>(c.k()), 1, 0,
                               static_cast<std::uint32_t>(c.n())});
  }
  return out;
}

RowMatrixXd run_dot_layer(const DotOperands& ops, Dataflow dataflow, CamState& cam,
                          Arithmetic arithmetic, CosineMode cosine) {
  const auto num_patches = static_cast<Eigen::Index>(ops.activations.size());
  const auto num_kernels = static_cast<Eigen::Index>(ops.weights.size());
  const std::size_t k = cam.word_bits();
  if (arithmetic == Arithmetic::kExact) {
    if (!ops.patches || !ops.kernels)
      throw ConfigError("run_dot_layer: exact arithmetic needs raw patches and kernels");
    if (ops.patches->rows() != num_patches || ops.kernels->rows() != num_kernels ||
        ops.patches->cols() != ops.kernels->cols())
      throw DimensionError("run_dot_layer: raw operand shapes disagree with contexts");
  }
  if (ops.bias && ops.bias->size() != num_kernels)
    throw DimensionError("run_dot_layer: bias length mismatch");

  RowMatrixXd out(num_patches, num_kernels);
  auto value = [&](Eigen::Index p, Eigen::Index j, std::size_t hd) {
    double v = arithmetic == Arithmetic::kExact
                   ? algebraic_dot(ops.patches->row(p), ops.kernels->row(j))
                   : geometric_dot(ops.activations[static_cast<std::size_t>(p)].norm,
                                   ops.weights[static_cast<std::size_t>(j)].norm, hd, k, cosine);
    if (ops.bias) v += static_cast<double>((*ops.bias)[j]);
    return v;
  };

  const bool weights_stored = dataflow == Dataflow::kWeightStationary;
  const std::span<const Context> stored = weights_stored ? ops.weights : ops.activations;
  const std::span<const Context> queries = weights_stored ? ops.activations : ops.weights;
  const std::size_t rows = cam.rows();
  std::vector<SearchHit> hits;
  for (std::size_t base = 0; base < stored.size(); base += rows) {
    const std::size_t tile = std::min(rows, stored.size() - base);
    cam.invalidate_all();
    for (std::size_t r = 0; r < tile; ++r) cam.write_row(r, stored[base + r].hash);
    for (std::size_t q = 0; q < queries.size(); ++q) {
      cam.search(queries[q].hash, hits);
      for (const SearchHit& hit : hits) {
        const auto s = static_cast<Eigen::Index>(base + hit.row);
        const auto qi = static_cast<Eigen::Index>(q);
        if (weights_stored)
          out(qi, s) = value(qi, s, hit.hd);
        else
          out(s, qi) = value(s, qi, hit.hd);
      }
    }
  }
  return out;
}

void relu_inplace(ActivationTensor& t) noexcept { t.values = t.values.cwiseMax(0.0); }

namespace {

template <typename Reduce>
ActivationTensor pool(const ActivationTensor& in, std::uint32_t window, std::uint32_t stride,
                      const char* what, Reduce reduce) {
  if (window == 0 || stride == 0) throw DimensionError(std::string(what) + ": window and stride must be >= 1");
  if (window > in.dims.h || window > in.dims.w)
    throw DimensionError(std::string(what) + ": window larger than input " + to_string(in.dims));
  const Dims od{in.dims.c, (in.dims.h - window) / stride + 1, (in.dims.w - window) / stride + 1};
  ActivationTensor out(od);
  for (std::uint32_t c = 0; c < od.c; ++c)
    for (std::uint32_t oy = 0; oy < od.h; ++oy)
      for (std::uint32_t ox = 0; ox < od.w; ++ox)
        out.at(c, oy, ox) = reduce(c, oy * stride, ox * stride);
  return out;
}

}  // namespace

ActivationTensor max_pool(const ActivationTensor& in, std::uint32_t window, std::uint32_t stride) {
  return pool(in, window, stride, "maxpool", [&](std::uint32_t c, std::uint32_t y0, std::uint32_t x0) {
    double m = -std::numeric_limits<double>::infinity();
    for (std::uint32_t dy = 0; dy < window; ++dy)
      for (std::uint32_t dx = 0; dx < window; ++dx) m = std::max(m, in.at(c, y0 + dy, x0 + dx));
    return m;
  });
}

ActivationTensor avg_pool(const ActivationTensor& in, std::uint32_t window, std::uint32_t stride) {
  return pool(in, window, stride, "avgpool", [&](std::uint32_t c, std::uint32_t y0, std::uint32_t x0) {
    double sum = 0.0;
    for (std::uint32_t dy = 0; dy < window; ++dy)
      for (std::uint32_t dx = 0; dx < window; ++dx) sum += in.at(c, y0 + dy, x0 + dx);
    return sum / (static_cast<double>(window) * window);
  });
}

ActivationTensor batch_norm(const ActivationTensor& in, const BatchNorm& bn) {
  if (bn.channels != in.dims.c)
    throw DimensionError("batchnorm: " + std::to_string(bn.channels) + " channels vs input " +
                         to_string(in.dims));
  ActivationTensor out = in;
  const std::size_t plane = std::size_t{in.dims.h} * in.dims.w;
  for (std::uint32_t c = 0; c < in.dims.c; ++c) {
    const double scale = double{bn.gamma[c]} / std::sqrt(double{bn.var[c]} + double{bn.eps});
    const double shift = double{bn.beta[c]} - double{bn.mean[c]} * scale;
    out.values.segment(static_cast<Eigen::Index>(c * plane), static_cast<Eigen::Index>(plane)).array() *= scale;
    out.values.segment(static_cast<Eigen::Index>(c * plane), static_cast<Eigen::Index>(plane)).array() += shift;
  }
  return out;
}

ActivationTensor to_tensor(const RowMatrixXd& pre, Dims od) {
  if (static_cast<std::size_t>(pre.rows()) != std::size_t{od.h} * od.w || pre.cols() != od.c)
    throw DimensionError("to_tensor: " + std::to_string(pre.rows()) + "x" + std::to_string(pre.cols()) +
                         " does not match " + to_string(od));
  ActivationTensor out(od);
  // (positions x kernels) -> (kernels, positions)
  Eigen::Map<RowMatrixXd>(out.values.data(), od.c, pre.rows()) = pre.transpose();
  return out;
}

ActivationTensor post_process(const LayerDescriptor& layer, const ActivationTensor& in,
                              const ActivationTensor& network_input,
                              std::span<const ActivationTensor> history) {
  return std::visit(
      Overloaded{
          [&](const Relu&) {
            ActivationTensor t = in;
            relu_inplace(t);
            return t;
          },
          [&](const MaxPool& l) { return max_pool(in, l.window, l.stride); },
          [&](const AvgPool& l) { return avg_pool(in, l.window, l.stride); },
          [&](const BatchNorm& l) { return batch_norm(in, l); },
          [&](const Flatten&) {
            return ActivationTensor(Dims{static_cast<std::uint32_t>(in.dims.size()), 1, 1}, in.values);
          },
          [&](const Add& l) {
            const ActivationTensor& other =
                l.source == Add::kNetworkInput ? network_input : history[l.source];
            if (!(other.dims == in.dims)) throw DimensionError("add: operand dims disagree");
            return ActivationTensor(in.dims, in.values + other.values);
          },
          [&](const auto&) -> ActivationTensor {
            throw ConfigError(std::string("post_process: ") + layer_kind_name(layer) +
                              " is a dot-product layer");
          },
      },
      layer);
}

NetworkRunner::NetworkRunner(const NetworkModel& model, ExecutionPlan plan)
    : model_(&model), plan_(std::move(plan)) {
  plan_.validate(model);
  dims_ = model.infer_dims();
  dot_slot_.assign(model.layers.size(), -1);
  const auto dot = model.dot_layers();
  for (std::size_t d = 0; d < dot.size(); ++d) {
    const std::size_t li = dot[d];
    const LayerDescriptor& layer = model.layers[li];
    const auto n = static_cast<Eigen::Index>(std::holds_alternative<Conv2d>(layer)
                                                 ? std::get<Conv2d>(layer).geometry.patch_length()
                                                 : std::get<Linear>(layer).in_features);
    const std::size_t k = plan_.hash_lengths[d];
    ProjectionMatrix proj = layer_projection(plan_.seed, li, n, static_cast<Eigen::Index>(k));
    std::vector<Context> weights = make_weight_contexts(layer, proj);
    dot_slot_[li] = static_cast<std::ptrdiff_t>(dot_states_.size());
    dot_states_.push_back({li, k, std::move(proj), std::move(weights)});
  }
}

RowMatrixXd NetworkRunner::run_dot(const DotLayerState& state, const ActivationTensor& in,
                                   bool online, CamState& cam, CostTrace* trace) const {
  const LayerDescriptor& layer = model_->layers[state.layer_index];
  const auto li = static_cast<std::uint32_t>(state.layer_index);
  RowMatrixXd patches;
  const RowMatrixXf* kernels = nullptr;
  const Eigen::VectorXf* bias = nullptr;
  if (const auto* conv = std::get_if<Conv2d>(&layer)) {
    patches = im2col(in, conv->geometry);
    kernels = &conv->weights;
    bias = conv->bias ? &*conv->bias : nullptr;
  } else {
    const auto& lin = std::get<Linear>(layer);
    patches = in.values.transpose();
    kernels = &lin.weights;
    bias = lin.bias ? &*lin.bias : nullptr;
  }

  const std::vector<Context> acts = activation_contexts(patches, state.projection, li, online, trace);

  cam.set_word_length(state.hash_length);
  const DotOperands ops{acts, state.weight_contexts, bias, &patches, kernels};
  RowMatrixXd pre = run_dot_layer(ops, plan_.dataflow, cam, plan_.arithmetic, plan_.cosine);

  if (trace) {
    trace->append_cam_events(li, static_cast<std::uint32_t>(cam.rows()), cam.take_events());
    DotLayerMeta meta{plan_.dataflow,
                      static_cast<std::uint32_t>(cam.rows()),
                      static_cast<std::uint32_t>(state.hash_length),
                      static_cast<std::uint32_t>(patches.rows()),
                      static_cast<std::uint32_t>(kernels->rows()),
                      static_cast<std::uint32_t>(patches.cols()),
                      1};
    CostTrace one;
    one.dot_layers.emplace(li, meta);
    trace->append(one);
  } else {
    (void)cam.take_events();
  }
  return pre;
}

Eigen::VectorXd NetworkRunner::run(const ActivationTensor& input, CostTrace* trace) const {
  if (!(input.dims == model_->input))
    throw DimensionError("input dims " + to_string(input.dims) + " vs model " + to_string(model_->input));
  CamState cam(plan_.cam);
  (void)cam.take_events();
  std::vector<ActivationTensor> history;
  history.reserve(model_->layers.size());
  const ActivationTensor* cur = &input;
  bool first_dot = true;
  for (std::size_t i = 0; i < model_->layers.size(); ++i) {
    const LayerDescriptor& layer = model_->layers[i];
    if (dot_slot_[i] >= 0) {
      const DotLayerState& state = dot_states_[static_cast<std::size_t>(dot_slot_[i])];
      RowMatrixXd pre = run_dot(state, *cur, !first_dot, cam, trace);
      first_dot = false;
      ActivationTensor out = to_tensor(pre, dims_[i]);
      const bool relu = std::holds_alternative<Conv2d>(layer) ? std::get<Conv2d>(layer).fused_relu
                                                              : std::get<Linear>(layer).fused_relu;
      if (relu) {
        relu_inplace(out);
        log_post_op(trace, i, out.dims.size());
      }
      history.push_back(std::move(out));
    } else {
      history.push_back(post_process(layer, *cur, input, history));
      if (!std::holds_alternative<Flatten>(layer)) log_post_op(trace, i, history.back().dims.size());
    }
    cur = &history.back();
  }
  return cur->values;
}

std::size_t argmax(const Eigen::VectorXd& logits) {
  if (logits.size() == 0) throw DimensionError("argmax of empty vector");
  Eigen::Index best = 0;
  logits.maxCoeff(&best);
  return static_cast<std::size_t>(best);
}

double top1(std::span<const std::size_t> predictions, std::span<const std::uint16_t> labels) {
  if (predictions.size() != labels.size()) throw DimensionError("top1: prediction/label count mismatch");
  if (predictions.empty()) return 0.0;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i) correct += predictions[i] == labels[i];
  return static_cast<double>(correct) / static_cast<double>(predictions.size());
}

NetworkResult run_network(const NetworkModel& model, const ExecutionPlan& plan,
                          std::span<const ActivationTensor> batch, unsigned threads) {
  const NetworkRunner runner(model, plan);
  NetworkResult result;
  result.logits.resize(batch.size());
  std::vector<CostTrace> traces(plan.record_trace ? batch.size() : 0);
  parallel_for(batch.size(), threads, [&](std::size_t i) {
    result.logits[i] = runner.run(batch[i], plan.record_trace ? &traces[i] : nullptr);
  });
  result.predictions.reserve(batch.size());
  for (const auto& l : result.logits) result.predictions.push_back(argmax(l));
  for (const auto& t : traces) result.trace.append(t);
  return result;
}

}  // namespace deepcam
