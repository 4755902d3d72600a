#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "deepcam/cam.hpp"
#include "deepcam/geodot.hpp"
#include "deepcam/network.hpp"
#include "deepcam/projection.hpp"
#include "deepcam/trace.hpp"

namespace deepcam {

enum class Arithmetic : std::uint8_t {
  kApproximate,  ///< norms + hamming distance through the CAM
  kExact,        ///< algebraic dot on the same schedule (plumbing oracle)
};

struct ExecutionPlan {
  Dataflow dataflow = Dataflow::kActivationStationary;
  CamConfig cam;
  /// One hash length per dot-product layer, in execution order.
  std::vector<std::size_t> hash_lengths;
  std::uint64_t seed = 0;
  Arithmetic arithmetic = Arithmetic::kApproximate;
  CosineMode cosine = CosineMode::kPiecewise;
  bool record_trace = true;

  static ExecutionPlan uniform(const NetworkModel& model, std::size_t k);

  /// Throws ConfigError when the plan does not fit `model`.
  void validate(const NetworkModel& model) const;
};

/// One flattened (C, R, S) patch per output position, output positions in
/// row-major order. Out-of-bounds taps read zero.
RowMatrixXd im2col(const ActivationTensor& input, const ConvGeometry& geometry);

/// Seed of the projection matrix owned by model layer `layer_index`.
std::uint64_t layer_seed(std::uint64_t global_seed, std::size_t layer_index) noexcept;

ProjectionMatrix layer_projection(std::uint64_t global_seed, std::size_t layer_index,
                                  Eigen::Index n, Eigen::Index k);

/// Contexts of every kernel row (kernels flattened like im2col patches).
std::vector<Context> make_weight_contexts(const RowMatrixXf& kernels, const ProjectionMatrix& c);
std::vector<Context> make_weight_contexts(const LayerDescriptor& layer, const ProjectionMatrix& c);

/// Hardware context path (adder-tree norm, crossbar sign projection). Modeled
/// as exact, so the result equals build_context(x, c); logs one transform
/// event when `trace` is given.
Context online_activation_context(const Eigen::Ref<const Eigen::VectorXd>& x,
                                  const ProjectionMatrix& c, std::uint32_t layer,
                                  CostTrace* trace);

/// Contexts of every patch row, projected with a single matrix product.
/// Agrees with build_context row by row except where a projection rounds to
/// within an ulp of zero. Logs one transform event per row when `online`.
std::vector<Context> activation_contexts(const RowMatrixXd& patches, const ProjectionMatrix& c,
                                         std::uint32_t layer, bool online, CostTrace* trace);

struct DotOperands {
  std::span<const Context> activations;
  std::span<const Context> weights;
  const Eigen::VectorXf* bias = nullptr;
  /// Required for Arithmetic::kExact.
  const RowMatrixXd* patches = nullptr;
  const RowMatrixXf* kernels = nullptr;
};

/// Pre-activation matrix (patches x kernels). The stationary operand is
/// loaded into the CAM in tiles of at most cam.rows(); every context of the
/// other operand is one search per tile. Bias is added in full precision.
RowMatrixXd run_dot_layer(const DotOperands& operands, Dataflow dataflow, CamState& cam,
                          Arithmetic arithmetic = Arithmetic::kApproximate,
                          CosineMode cosine = CosineMode::kPiecewise);

// Digital post-processing, all in double precision.
void relu_inplace(ActivationTensor& t) noexcept;
ActivationTensor max_pool(const ActivationTensor& in, std::uint32_t window, std::uint32_t stride);
ActivationTensor avg_pool(const ActivationTensor& in, std::uint32_t window, std::uint32_t stride);
ActivationTensor batch_norm(const ActivationTensor& in, const BatchNorm& bn);

/// Reshapes a (patches x kernels) pre-activation into a (kernels, H, W) tensor.
ActivationTensor to_tensor(const RowMatrixXd& pre_activation, Dims out_dims);

/// Applies one non-dot layer. `history` holds outputs of earlier layers (for add).
ActivationTensor post_process(const LayerDescriptor& layer, const ActivationTensor& in,
                              const ActivationTensor& network_input,
                              std::span<const ActivationTensor> history);

/// Model + plan with projections and offline weight contexts prepared once.
/// `run` is const and may be called concurrently.
class NetworkRunner {
 public:
  NetworkRunner(const NetworkModel& model, ExecutionPlan plan);

  const NetworkModel& model() const noexcept { return *model_; }
  const ExecutionPlan& plan() const noexcept { return plan_; }

  /// Logits of one input; appends its events to `trace` when non-null.
  Eigen::VectorXd run(const ActivationTensor& input, CostTrace* trace) const;

 private:
  struct DotLayerState {
    std::size_t layer_index;
    std::size_t hash_length;
    ProjectionMatrix projection;
    std::vector<Context> weight_contexts;
  };

  RowMatrixXd run_dot(const DotLayerState& state, const ActivationTensor& in, bool online,
                      CamState& cam, CostTrace* trace) const;

  const NetworkModel* model_;
  ExecutionPlan plan_;
  std::vector<Dims> dims_;
  std::vector<DotLayerState> dot_states_;
  std::vector<std::ptrdiff_t> dot_slot_;  // model layer -> dot_states_ index or -1
};

struct NetworkResult {
  std::vector<Eigen::VectorXd> logits;
  std::vector<std::size_t> predictions;
  CostTrace trace;
};

/// Runs every input; outputs and trace are identical for any thread count.
NetworkResult run_network(const NetworkModel& model, const ExecutionPlan& plan,
                          std::span<const ActivationTensor> batch, unsigned threads = 1);

std::size_t argmax(const Eigen::VectorXd& logits);

/// Fraction of predictions equal to labels.
double top1(std::span<const std::size_t> predictions, std::span<const std::uint16_t> labels);

}  // namespace deepcam
