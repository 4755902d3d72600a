#include "deepcam/tuner.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "deepcam/error.hpp"

namespace deepcam {

namespace {

std::string fmt_double(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::vector<std::size_t> parse_list(const std::string& text) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      const unsigned long v = std::stoul(item, &used);
      if (used != item.size()) throw std::invalid_argument(item);
      out.push_back(v);
    } catch (const std::exception&) {
      throw ConfigError("expected a comma-separated list of integers, got '" + text + "'");
    }
  }
  return out;
}

std::string join(const std::vector<std::size_t>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + std::to_string(v[i]);
  return out;
}

}  // namespace

void TuneConfig::validate() const {
  if (!(tolerance_points >= 0)) throw ConfigError("tune tolerance must be >= 0");
  if (candidates.empty()) throw ConfigError("tune candidates must be non-empty");
  if (!std::is_sorted(candidates.begin(), candidates.end()) ||
      std::adjacent_find(candidates.begin(), candidates.end()) != candidates.end())
    throw ConfigError("tune candidates must be strictly ascending");
  for (std::size_t k : candidates)
    if (!is_allowed_word_bits(k)) throw ConfigError("tune candidate " + std::to_string(k) + " not allowed");
}

std::size_t TuneResult::total_bits() const {
  return std::accumulate(hash_lengths.begin(), hash_lengths.end(), std::size_t{0});
}

std::string TuneResult::to_config_text() const {
  KeyValueConfig cfg;
  cfg.set("dot_layers", join(dot_layers));
  cfg.set("hash_lengths", join(hash_lengths));
  cfg.set("baseline_accuracy", fmt_double(baseline_accuracy));
  cfg.set("achieved_accuracy", fmt_double(achieved_accuracy));
  cfg.set("total_bits", std::to_string(total_bits()));
  return cfg.to_string();
}

std::string TuneResult::sensitivity_csv() const {
  std::string out = "layer,k,accuracy\n";
  for (std::size_t d = 0; d < sensitivity.size(); ++d)
    for (std::size_t c = 0; c < candidates.size(); ++c)
      out += std::to_string(dot_layers[d]) + "," + std::to_string(candidates[c]) + "," +
             fmt_double(sensitivity[d][c]) + "\n";
  return out;
}

std::vector<std::size_t> load_tuned_hash_lengths(const std::filesystem::path& path) {
  return parse_list(KeyValueConfig::load(path).at("hash_lengths"));
}

AccuracyOracle::AccuracyOracle(const NetworkModel& model, ExecutionPlan base,
                               std::span<const ActivationTensor> inputs, std::span<const std::uint16_t> labels,
                               unsigned threads)
    : model_(&model), base_(std::move(base)), inputs_(inputs), labels_(labels), threads_(threads) {
  if (inputs.empty()) throw ConfigError("calibration set is empty");
  if (inputs.size() != labels.size()) throw DimensionError("calibration inputs/labels disagree");
  base_.record_trace = false;
}

double AccuracyOracle::operator()(const std::vector<std::size_t>& hash_lengths) {
  if (const auto it = memo_.find(hash_lengths); it != memo_.end()) return it->second;
  ExecutionPlan plan = base_;
  plan.hash_lengths = hash_lengths;
  const NetworkResult r = run_network(*model_, plan, inputs_, threads_);
  const double acc = top1(r.predictions, labels_);
  ++evaluations_;
  memo_.emplace(hash_lengths, acc);
  return acc;
}

namespace {

std::vector<std::vector<double>> scan(AccuracyOracle& oracle, std::size_t layers, const TuneConfig& cfg) {
  const std::size_t kmax = cfg.candidates.back();
  std::vector<std::vector<double>> table(layers, std::vector<double>(cfg.candidates.size()));
  for (std::size_t d = 0; d < layers; ++d) {
    for (std::size_t c = 0; c < cfg.candidates.size(); ++c) {
      std::vector<std::size_t> ks(layers, kmax);
      ks[d] = cfg.candidates[c];
      table[d][c] = oracle(ks);
    }
  }
  return table;
}

}  // namespace

std::vector<std::vector<double>> sensitivity_scan(const NetworkModel& model, const ExecutionPlan& base,
                                                  const Dataset& calib, const TuneConfig& cfg) {
  cfg.validate();
  const auto inputs = calib.tensors();
  ExecutionPlan plan = base;
  plan.seed = cfg.seed;
  AccuracyOracle oracle(model, plan, inputs, calib.labels, cfg.threads);
  return scan(oracle, model.dot_layers().size(), cfg);
}

TuneResult tune_hash_lengths(const NetworkModel& model, const ExecutionPlan& base, const Dataset& calib,
                             const TuneConfig& cfg) {
  cfg.validate();
  const auto inputs = calib.tensors();
  ExecutionPlan plan = base;
  plan.seed = cfg.seed;
  AccuracyOracle oracle(model, plan, inputs, calib.labels, cfg.threads);

  TuneResult result;
  result.dot_layers = model.dot_layers();
  result.candidates = cfg.candidates;
  const std::size_t layers = result.dot_layers.size();
  const std::size_t kmax = cfg.candidates.back();
  result.sensitivity = scan(oracle, layers, cfg);

  std::vector<std::size_t> chosen(layers, kmax);
  result.baseline_accuracy = oracle(chosen);
  // Small epsilon so a drop of exactly `tolerance` points is accepted.
  const double floor = result.baseline_accuracy - cfg.tolerance_points / 100.0 - 1e-12;
  for (std::size_t d = 0; d < layers; ++d) {
    for (std::size_t k : cfg.candidates) {
      std::vector<std::size_t> trial = chosen;
      trial[d] = k;
      if (oracle(trial) >= floor) {
        chosen[d] = k;
        break;
      }
    }
  }
  result.hash_lengths = chosen;
  result.achieved_accuracy = oracle(chosen);
  if (result.achieved_accuracy < floor)
    throw Error("tune_hash_lengths: chosen configuration violates the tolerance");
  return result;
}

}  // namespace deepcam
