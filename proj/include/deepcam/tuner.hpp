#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "deepcam/modelio.hpp"
#include "deepcam/netexec.hpp"

namespace deepcam {

struct TuneConfig {
  double tolerance_points = 1.0;  ///< allowed Top-1 drop, percentage points
  std::vector<std::size_t> candidates{256, 512, 768, 1024};
  std::uint64_t seed = 0;
  unsigned threads = 1;

  void validate() const;
};

struct TuneResult {
  std::vector<std::size_t> dot_layers;     ///< model layer index per dot layer
  std::vector<std::size_t> hash_lengths;   ///< chosen k per dot layer
  double baseline_accuracy = 0;            ///< calibration Top-1 with every layer at max
  double achieved_accuracy = 0;            ///< calibration Top-1 of the chosen lengths
  /// sensitivity[d][c]: calibration Top-1 with dot layer d at candidates[c], others at max.
  std::vector<std::vector<double>> sensitivity;
  std::vector<std::size_t> candidates;

  std::size_t total_bits() const;

  /// `dot_layers`, `hash_lengths`, accuracies as KeyValueConfig text.
  std::string to_config_text() const;
  /// CSV: layer,k,accuracy
  std::string sensitivity_csv() const;
};

/// Evaluates calibration accuracy for hash-length assignments, memoized.
class AccuracyOracle {
 public:
  AccuracyOracle(const NetworkModel& model, ExecutionPlan base, std::span<const ActivationTensor> inputs,
                 std::span<const std::uint16_t> labels, unsigned threads);

  double operator()(const std::vector<std::size_t>& hash_lengths);
  std::size_t evaluations() const noexcept { return evaluations_; }

 private:
  const NetworkModel* model_;
  ExecutionPlan base_;
  std::span<const ActivationTensor> inputs_;
  std::span<const std::uint16_t> labels_;
  unsigned threads_;
  std::map<std::vector<std::size_t>, double> memo_;
  std::size_t evaluations_ = 0;
};

/// Accuracy of each dot layer at each candidate with all other layers at max.
std::vector<std::vector<double>> sensitivity_scan(const NetworkModel& model, const ExecutionPlan& base,
                                                  const Dataset& calib, const TuneConfig& cfg);

/// Greedy first-to-last: each layer takes the smallest candidate whose
/// calibration accuracy stays >= baseline - tolerance, given the layers
/// already fixed before it (later layers still at max).
TuneResult tune_hash_lengths(const NetworkModel& model, const ExecutionPlan& base, const Dataset& calib,
                             const TuneConfig& cfg);

/// Reads the hash lengths back from to_config_text() output.
std::vector<std::size_t> load_tuned_hash_lengths(const std::filesystem::path& path);

}  // namespace deepcam
