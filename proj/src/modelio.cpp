#include "deepcam/modelio.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "deepcam/error.hpp"

namespace deepcam {

namespace {

enum class Kind : std::uint8_t {
  kConv2d = 1,
  kLinear = 2,
  kRelu = 3,
  kMaxPool = 4,
  kAvgPool = 5,
  kBatchNorm = 6,
  kFlatten = 7,
  kAdd = 8,
};

constexpr std::uint8_t kFlagBias = 1;
constexpr std::uint8_t kFlagRelu = 2;

// Guards against absurd allocations from corrupted headers.
constexpr std::uint64_t kMaxElements = std::uint64_t{1} << 31;

class Writer {
 public:
  void bytes(std::string_view s) { out_.insert(out_.end(), s.begin(), s.end()); }
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u16(std::uint16_t v) { le(v); }
  void u32(std::uint32_t v) { le(v); }
  void f32(float v) { le(std::bit_cast<std::uint32_t>(v)); }
  template <typename Derived>
  void f32s(const Eigen::DenseBase<Derived>& m) {
    // row-major element order
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) f32(m(r, c));
  }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  template <typename T>
  void le(T v) {
    for (std::size_t i = 0; i < sizeof(T); ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::size_t offset() const noexcept { return pos_; }
  std::size_t remaining() const noexcept { return bytes_.size() - pos_; }

  void need(std::size_t n, const char* what) const {
    if (remaining() < n)
      throw FormatError(FormatError::Code::kTruncated, pos_,
                        std::string("truncated ") + what + ": need " + std::to_string(n) + " bytes, have " +
                            std::to_string(remaining()));
  }
  std::uint8_t u8(const char* what) {
    need(1, what);
    return bytes_[pos_++];
  }
  std::uint16_t u16(const char* what) { return le<std::uint16_t>(what); }
  std::uint32_t u32(const char* what) { return le<std::uint32_t>(what); }
  float f32(const char* what) { return std::bit_cast<float>(le<std::uint32_t>(what)); }

  template <typename Matrix>
  void f32s(Matrix& m, std::uint64_t rows, std::uint64_t cols, const char* what) {
    const std::uint64_t count = rows * cols;
    if (rows != 0 && count / rows != cols) throw FormatError(FormatError::Code::kShapeMismatch, pos_, "size overflow");
    if (count > kMaxElements)
      throw FormatError(FormatError::Code::kShapeMismatch, pos_, std::string(what) + " too large");
    need(static_cast<std::size_t>(count) * 4, what);
    m.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = f32(what);
  }
  Eigen::VectorXf vector(std::uint64_t n, const char* what) {
    Eigen::VectorXf v;
    f32s(v, n, 1, what);
    return v;
  }
  void magic(std::string_view expected) {
    if (remaining() < expected.size() ||
        std::memcmp(bytes_.data() + pos_, expected.data(), expected.size()) != 0)
      throw FormatError(FormatError::Code::kBadMagic, pos_, "bad magic, expected '" + std::string(expected) + "'");
    pos_ += expected.size();
  }

 private:
  template <typename T>
  T le(const char* what) {
    need(sizeof(T), what);
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(T{bytes_[pos_ + i]} << (8 * i));
    pos_ += sizeof(T);
    return v;
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

std::uint8_t dot_flags(const std::optional<Eigen::VectorXf>& bias, bool relu) {
  return static_cast<std::uint8_t>((bias ? kFlagBias : 0) | (relu ? kFlagRelu : 0));
}

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};

}  // namespace

std::vector<std::uint8_t> serialize_model(const NetworkModel& model) {
  if (model.layers.size() > 0xFFFF) throw ConfigError("serialize_model: too many layers");
  Writer w;
  w.bytes("DCAM");
  w.u16(kModelFormatVersion);
  w.u16(static_cast<std::uint16_t>(model.layers.size()));
  w.u32(model.input.c);
  w.u32(model.input.h);
  w.u32(model.input.w);
  for (const LayerDescriptor& layer : model.layers) {
    std::visit(Overloaded{
                   [&](const Conv2d& l) {
                     w.u8(static_cast<std::uint8_t>(Kind::kConv2d));
                     w.u8(dot_flags(l.bias, l.fused_relu));
                     for (std::uint32_t v : {l.out_c, l.geometry.in_c, l.geometry.kernel_h, l.geometry.kernel_w,
                                             l.geometry.stride, l.geometry.pad})
                       w.u32(v);
                     w.f32s(l.weights);
                     if (l.bias) w.f32s(*l.bias);
                   },
                   [&](const Linear& l) {
                     w.u8(static_cast<std::uint8_t>(Kind::kLinear));
                     w.u8(dot_flags(l.bias, l.fused_relu));
                     w.u32(l.in_features);
                     w.u32(l.out_features);
                     w.f32s(l.weights);
                     if (l.bias) w.f32s(*l.bias);
                   },
                   [&](const Relu&) {
                     w.u8(static_cast<std::uint8_t>(Kind::kRelu));
                     w.u8(0);
                   },
                   [&](const MaxPool& l) {
                     w.u8(static_cast<std::uint8_t>(Kind::kMaxPool));
                     w.u8(0);
                     w.u32(l.window);
                     w.u32(l.stride);
                   },
                   [&](const AvgPool& l) {
                     w.u8(static_cast<std::uint8_t>(Kind::kAvgPool));
                     w.u8(0);
                     w.u32(l.window);
                     w.u32(l.stride);
                   },
                   [&](const BatchNorm& l) {
                     w.u8(static_cast<std::uint8_t>(Kind::kBatchNorm));
                     w.u8(0);
                     w.u32(l.channels);
                     w.f32(l.eps);
                     w.f32s(l.gamma);
                     w.f32s(l.beta);
                     w.f32s(l.mean);
                     w.f32s(l.var);
                   },
                   [&](const Flatten&) {
                     w.u8(static_cast<std::uint8_t>(Kind::kFlatten));
                     w.u8(0);
                   },
                   [&](const Add& l) {
                     w.u8(static_cast<std::uint8_t>(Kind::kAdd));
                     w.u8(0);
                     w.u32(l.source);
                   },
               },
               layer);
  }
  return w.take();
}

NetworkModel parse_model(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  r.magic("DCAM");
  const std::size_t version_at = r.offset();
  if (const auto version = r.u16("version"); version != kModelFormatVersion)
    throw FormatError(FormatError::Code::kVersionMismatch, version_at,
                      "unsupported model version " + std::to_string(version));
  const std::uint16_t count = r.u16("layer count");
  NetworkModel model;
  model.input.c = r.u32("input dims");
  model.input.h = r.u32("input dims");
  model.input.w = r.u32("input dims");
  if (model.input.size() == 0 || model.input.size() > kMaxElements)
    throw FormatError(FormatError::Code::kShapeMismatch, r.offset() - 12, "invalid input dims");

  for (std::uint16_t i = 0; i < count; ++i) {
    const std::size_t record_at = r.offset();
    const std::uint8_t kind = r.u8("layer kind");
    const std::size_t flags_at = r.offset();
    const std::uint8_t flags = r.u8("layer flags");
    const bool dot = kind == static_cast<std::uint8_t>(Kind::kConv2d) ||
                     kind == static_cast<std::uint8_t>(Kind::kLinear);
    if (kind < 1 || kind > 8)
      throw FormatError(FormatError::Code::kUnknownKind, record_at,
                        "unknown layer kind " + std::to_string(kind) + " in record " + std::to_string(i));
    if ((dot && (flags & ~(kFlagBias | kFlagRelu))) || (!dot && flags != 0))
      throw FormatError(FormatError::Code::kBadFlags, flags_at,
                        "invalid flags 0x" + std::to_string(flags) + " in record " + std::to_string(i));
    switch (static_cast<Kind>(kind)) {
      case Kind::kConv2d: {
        Conv2d l;
        l.out_c = r.u32("conv geometry");
        l.geometry.in_c = r.u32("conv geometry");
        l.geometry.kernel_h = r.u32("conv geometry");
        l.geometry.kernel_w = r.u32("conv geometry");
        l.geometry.stride = r.u32("conv geometry");
        l.geometry.pad = r.u32("conv geometry");
        l.fused_relu = flags & kFlagRelu;
        const std::uint64_t n = std::uint64_t{l.geometry.in_c} * l.geometry.kernel_h * l.geometry.kernel_w;
        r.f32s(l.weights, l.out_c, n, "conv weights");
        if (flags & kFlagBias) l.bias = r.vector(l.out_c, "conv bias");
        model.layers.emplace_back(std::move(l));
        break;
      }
      case Kind::kLinear: {
        Linear l;
        l.in_features = r.u32("linear geometry");
        l.out_features = r.u32("linear geometry");
        l.fused_relu = flags & kFlagRelu;
        r.f32s(l.weights, l.out_features, l.in_features, "linear weights");
        if (flags & kFlagBias) l.bias = r.vector(l.out_features, "linear bias");
        model.layers.emplace_back(std::move(l));
        break;
      }
      case Kind::kRelu:
        model.layers.emplace_back(Relu{});
        break;
      case Kind::kMaxPool: {
        MaxPool l;
        l.window = r.u32("pool geometry");
        l.stride = r.u32("pool geometry");
        model.layers.emplace_back(l);
        break;
      }
      case Kind::kAvgPool: {
        AvgPool l;
        l.window = r.u32("pool geometry");
        l.stride = r.u32("pool geometry");
        model.layers.emplace_back(l);
        break;
      }
      case Kind::kBatchNorm: {
        BatchNorm l;
        l.channels = r.u32("batchnorm channels");
        l.eps = r.f32("batchnorm eps");
        l.gamma = r.vector(l.channels, "batchnorm gamma");
        l.beta = r.vector(l.channels, "batchnorm beta");
        l.mean = r.vector(l.channels, "batchnorm mean");
        l.var = r.vector(l.channels, "batchnorm var");
        model.layers.emplace_back(std::move(l));
        break;
      }
      case Kind::kFlatten:
        model.layers.emplace_back(Flatten{});
        break;
      case Kind::kAdd:
        model.layers.emplace_back(Add{r.u32("add source")});
        break;
    }
    try {
      (void)model.infer_dims();
    } catch (const DimensionError& e) {
      throw FormatError(FormatError::Code::kShapeMismatch, record_at, e.what());
    }
  }
  if (r.remaining() != 0)
    throw FormatError(FormatError::Code::kTrailingData, r.offset(),
                      std::to_string(r.remaining()) + " trailing bytes after last layer");
  return model;
}

std::vector<std::uint8_t> serialize_dataset(const Dataset& data) {
  if (static_cast<std::size_t>(data.samples.rows()) != data.labels.size() ||
      static_cast<std::size_t>(data.samples.cols()) != data.dims.size())
    throw DimensionError("serialize_dataset: samples/labels/dims disagree");
  Writer w;
  w.bytes("DCDS");
  w.u16(kDatasetFormatVersion);
  w.u16(data.num_classes);
  w.u32(static_cast<std::uint32_t>(data.labels.size()));
  w.u32(data.dims.c);
  w.u32(data.dims.h);
  w.u32(data.dims.w);
  w.f32s(data.samples);
  for (std::uint16_t l : data.labels) w.u16(l);
  return w.take();
}

Dataset parse_dataset(std::span<const std::uint8_t> bytes, std::size_t limit) {
  Reader r(bytes);
  r.magic("DCDS");
  const std::size_t version_at = r.offset();
  if (const auto version = r.u16("version"); version != kDatasetFormatVersion)
    throw FormatError(FormatError::Code::kVersionMismatch, version_at,
                      "unsupported dataset version " + std::to_string(version));
  Dataset out;
  out.num_classes = r.u16("class count");
  const std::uint32_t count = r.u32("sample count");
  out.dims.c = r.u32("sample dims");
  out.dims.h = r.u32("sample dims");
  out.dims.w = r.u32("sample dims");
  const std::uint64_t per = out.dims.size();
  const std::uint64_t payload = std::uint64_t{count} * (per * 4 + 2);
  if (per > kMaxElements || payload != r.remaining())
    throw FormatError(r.remaining() < payload ? FormatError::Code::kTruncated : FormatError::Code::kShapeMismatch,
                      r.offset(),
                      "payload of " + std::to_string(r.remaining()) + " bytes does not match " +
                          std::to_string(count) + " samples of " + to_string(out.dims));
  const std::size_t keep = std::min<std::size_t>(count, limit);
  const std::size_t data_at = r.offset();
  RowMatrixXf all;
  r.f32s(all, count, per, "samples");
  out.samples = all.topRows(static_cast<Eigen::Index>(keep));
  out.labels.reserve(keep);
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::size_t at = r.offset();
    const std::uint16_t label = r.u16("labels");
    if (label >= out.num_classes)
      throw FormatError(FormatError::Code::kBadLabel, at,
                        "label " + std::to_string(label) + " of sample " + std::to_string(i) + " >= class count " +
                            std::to_string(out.num_classes));
    if (i < keep) out.labels.push_back(label);
  }
  for (Eigen::Index i = 0; i < out.samples.size(); ++i)
    if (!std::isfinite(out.samples.data()[i]))
      throw FormatError(FormatError::Code::kShapeMismatch, data_at + 4 * static_cast<std::size_t>(i),
                        "non-finite sample value");
  return out;
}

ActivationTensor Dataset::sample(std::size_t i) const {
  if (i >= size()) throw DimensionError("Dataset::sample: index out of range");
  return ActivationTensor(dims, samples.row(static_cast<Eigen::Index>(i)).transpose().cast<double>());
}

std::vector<ActivationTensor> Dataset::tensors() const {
  std::vector<ActivationTensor> out;
  out.reserve(size());
  for (std::size_t i = 0; i < size(); ++i) out.push_back(sample(i));
  return out;
}

bool operator==(const Dataset& a, const Dataset& b) {
  return a.dims == b.dims && a.num_classes == b.num_classes && a.labels == b.labels &&
         a.samples.rows() == b.samples.rows() && a.samples.cols() == b.samples.cols() && a.samples == b.samples;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failed: " + path.string());
  return bytes;
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  write_file(path, {reinterpret_cast<const std::uint8_t*>(text.data()), text.size()});
}

NetworkModel load_model(const std::filesystem::path& path) { return parse_model(read_file(path)); }

Dataset load_dataset(const std::filesystem::path& path, std::size_t limit) {
  return parse_dataset(read_file(path), limit);
}

void save_model(const std::filesystem::path& path, const NetworkModel& model) {
  write_file(path, serialize_model(model));
}

void save_dataset(const std::filesystem::path& path, const Dataset& data) {
  write_file(path, serialize_dataset(data));
}

KeyValueConfig KeyValueConfig::parse(const std::string& text) {
  KeyValueConfig cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return std::string();
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
    if (!cfg.entries_.emplace(key, value).second)
      throw ConfigError("config line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
  }
  return cfg;
}

KeyValueConfig KeyValueConfig::load(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  return parse(std::string(bytes.begin(), bytes.end()));
}

const std::string& KeyValueConfig::at(const std::string& key) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) throw ConfigError("missing config key '" + key + "'");
  return it->second;
}

double KeyValueConfig::number(const std::string& key) const {
  const std::string& v = at(key);
  std::size_t used = 0;
  double d = 0;
  try {
    d = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != v.size() || v.empty()) throw ConfigError("config key '" + key + "': '" + v + "' is not a number");
  return d;
}

std::string KeyValueConfig::to_string() const {
  std::string out;
  for (const auto& [k, v] : entries_) out += k + " = " + v + "\n";
  return out;
}

}  // namespace deepcam
