#pragma once

// Binary containers (little-endian throughout).
//
// Model file
//   "DCAM" | u16 version (=1) | u16 layer count | u32 in_c, in_h, in_w
//   then per layer: u8 kind | u8 flags | kind-specific fields
//     1 conv2d    u32 out_c, in_c, kernel_h, kernel_w, stride, pad
//                 f32 weights[out_c][in_c][kh][kw], f32 bias[out_c] if flags&1
//     2 linear    u32 in_features, out_features
//                 f32 weights[out][in], f32 bias[out] if flags&1
//     3 relu      -
//     4 maxpool   u32 window, stride
//     5 avgpool   u32 window, stride
//     6 batchnorm u32 channels, f32 eps, f32 gamma[c], beta[c], mean[c], var[c]
//     7 flatten   -
//     8 add       u32 source layer index (0xFFFFFFFF = network input)
//   flags: bit0 has bias, bit1 fused ReLU; only conv2d/linear may set any bit.
//
// Dataset file
//   "DCDS" | u16 version (=1) | u16 class count | u32 sample count
//   u32 c, h, w | f32 data[count][c][h][w] | u16 labels[count]

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "deepcam/network.hpp"

namespace deepcam {

inline constexpr std::uint16_t kModelFormatVersion = 1;
inline constexpr std::uint16_t kDatasetFormatVersion = 1;

struct Dataset {
  Dims dims;
  std::uint16_t num_classes = 0;
  RowMatrixXf samples;  ///< one flattened (C, H, W) sample per row
  std::vector<std::uint16_t> labels;

  std::size_t size() const noexcept { return labels.size(); }
  ActivationTensor sample(std::size_t i) const;
  std::vector<ActivationTensor> tensors() const;

  friend bool operator==(const Dataset&, const Dataset&);
};

std::vector<std::uint8_t> serialize_model(const NetworkModel& model);
NetworkModel parse_model(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> serialize_dataset(const Dataset& data);
/// Reads at most `limit` samples; the full payload is still validated.
Dataset parse_dataset(std::span<const std::uint8_t> bytes,
                      std::size_t limit = std::numeric_limits<std::size_t>::max());

NetworkModel load_model(const std::filesystem::path& path);
Dataset load_dataset(const std::filesystem::path& path,
                     std::size_t limit = std::numeric_limits<std::size_t>::max());
void save_model(const std::filesystem::path& path, const NetworkModel& model);
void save_dataset(const std::filesystem::path& path, const Dataset& data);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void write_text(const std::filesystem::path& path, const std::string& text);

/// Flat `key = value` config. '#' starts a comment, blank lines are skipped,
/// keys are unique. Keys keep insertion-independent (sorted) order.
class KeyValueConfig {
 public:
  static KeyValueConfig parse(const std::string& text);
  static KeyValueConfig load(const std::filesystem::path& path);

  bool contains(const std::string& key) const { return entries_.contains(key); }
  const std::string& at(const std::string& key) const;
  double number(const std::string& key) const;
  const std::map<std::string, std::string>& entries() const noexcept { return entries_; }

  void set(const std::string& key, const std::string& value) { entries_[key] = value; }
  std::string to_string() const;

 private:
  std::map<std::string, std::string> entries_;
};

}  // namespace deepcam
