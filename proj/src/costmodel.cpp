#include "deepcam/costmodel.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <map>

#include "deepcam/cam.hpp"
#include "deepcam/error.hpp"

namespace deepcam {

namespace {

constexpr std::uint32_t kRowSizes[] = {64, 128, 256, 512};
constexpr std::uint32_t kWordSizes[] = {256, 512, 768, 1024};

std::string geometry_key(std::uint32_t rows, std::uint32_t bits) {
  return std::to_string(rows) + "x" + std::to_string(bits);
}

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string exact(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, r.ptr};
}

std::uint64_t ceil_div(std::uint64_t a, std::uint64_t b) { return (a + b - 1) / b; }

}  // namespace

CostTable CostTable::defaults() {
  CostTable t;
  for (std::uint32_t rows : kRowSizes) {
    for (std::uint32_t bits : kWordSizes) {
      CamCost c;
      // match-line energy scales with cells, plus per-row sense amplifiers
      c.search_energy_pj = 0.05 * rows * (bits / 256.0) + 0.5 * (rows / 64.0);
      c.write_energy_pj = 0.01 * bits + 0.001 * rows;
      c.search_cycles = 2;
      c.write_cycles_per_row = 1;
      t.cam[{rows, bits}] = c;
    }
  }
  t.finalize_energy_pj = 0.5;
  t.finalize_cycles = 0;
  t.transform_energy_pj_per_cell = 0.001;
  t.transform_cycles = 1;
  t.post_energy_pj_per_element = 0.1;
  t.post_cycles_per_element = 0;
  return t;
}

CostTable CostTable::from_config(const KeyValueConfig& cfg) {
  bool use_defaults = true;
  if (cfg.contains("defaults")) {
    const std::string& v = cfg.at("defaults");
    if (v != "true" && v != "false") throw ConfigError("cost table: defaults must be true or false");
    use_defaults = v == "true";
  }
  CostTable t = use_defaults ? defaults() : CostTable{};
  struct Scalar {
    const char* key;
    double CostTable::*field;
  };
  static constexpr Scalar kScalars[] = {
      {"finalize_energy_pj", &CostTable::finalize_energy_pj},
      {"finalize_cycles", &CostTable::finalize_cycles},
      {"transform_energy_pj_per_cell", &CostTable::transform_energy_pj_per_cell},
      {"transform_cycles", &CostTable::transform_cycles},
      {"post_energy_pj_per_element", &CostTable::post_energy_pj_per_element},
      {"post_cycles_per_element", &CostTable::post_cycles_per_element},
  };
  struct PerGeometry {
    const char* prefix;
    double CamCost::*field;
  };
  static constexpr PerGeometry kPerGeometry[] = {
      {"search_energy_pj", &CamCost::search_energy_pj},
      {"write_energy_pj", &CamCost::write_energy_pj},
      {"search_cycles", &CamCost::search_cycles},
      {"write_cycles_per_row", &CamCost::write_cycles_per_row},
  };
  for (const auto& [key, value] : cfg.entries()) {
    if (key == "defaults") continue;
    bool known = false;
    for (const Scalar& s : kScalars) {
      if (key == s.key) {
        t.*(s.field) = cfg.number(key);
        known = true;
      }
    }
    for (const PerGeometry& g : kPerGeometry) {
      const std::string prefix = std::string(g.prefix) + ".";
      if (key.rfind(prefix, 0) != 0) continue;
      unsigned rows = 0, bits = 0;
      char tail = 0;
      if (std::sscanf(key.c_str() + prefix.size(), "%ux%u%c", &rows, &bits, &tail) != 2 ||
          !is_allowed_rows(rows) || !is_allowed_word_bits(bits))
        throw ConfigError("cost table: bad geometry in key '" + key + "'");
      t.cam[{rows, bits}].*(g.field) = cfg.number(key);
      known = true;
    }
    if (!known) throw ConfigError("cost table: unknown key '" + key + "'");
  }
  t.check_shape();
  return t;
}

KeyValueConfig CostTable::to_config() const {
  KeyValueConfig cfg;
  cfg.set("defaults", "false");
  for (const auto& [geo, c] : cam) {
    const std::string g = geometry_key(geo.first, geo.second);
    cfg.set("search_energy_pj." + g, exact(c.search_energy_pj));
    cfg.set("write_energy_pj." + g, exact(c.write_energy_pj));
    cfg.set("search_cycles." + g, exact(c.search_cycles));
    cfg.set("write_cycles_per_row." + g, exact(c.write_cycles_per_row));
  }
  cfg.set("finalize_energy_pj", exact(finalize_energy_pj));
  cfg.set("finalize_cycles", exact(finalize_cycles));
  cfg.set("transform_energy_pj_per_cell", exact(transform_energy_pj_per_cell));
  cfg.set("transform_cycles", exact(transform_cycles));
  cfg.set("post_energy_pj_per_element", exact(post_energy_pj_per_element));
  cfg.set("post_cycles_per_element", exact(post_cycles_per_element));
  return cfg;
}

const CamCost& CostTable::at(std::uint32_t rows, std::uint32_t word_bits) const {
  const auto it = cam.find({rows, word_bits});
  if (it == cam.end())
    throw ConfigError("cost table has no entry for " + geometry_key(rows, word_bits));
  return it->second;
}

void CostTable::check_shape() const {
  for (const auto& [geo, c] : cam) {
    for (const auto& [other, d] : cam) {
      const bool same_rows_wider = other.first == geo.first && other.second > geo.second;
      const bool same_bits_taller = other.second == geo.second && other.first > geo.first;
      if ((same_rows_wider || same_bits_taller) && !(d.search_energy_pj > c.search_energy_pj))
        throw ConfigError("cost table: search energy at " + geometry_key(other.first, other.second) +
                          " must exceed " + geometry_key(geo.first, geo.second));
    }
  }
}

const LayerCost& CostReport::layer(std::uint32_t index) const {
  for (const LayerCost& l : layers)
    if (l.layer == index) return l;
  throw ConfigError("report has no layer " + std::to_string(index));
}

double systolic_cycles(std::uint64_t kernels, std::uint64_t positions, std::uint64_t length,
                       SystolicArray a) {
  if (kernels == 0 || positions == 0 || length == 0)
    throw ConfigError("systolic_cycles: empty layer");
  return static_cast<double>(ceil_div(kernels, a.cols) * ceil_div(positions, a.rows) *
                             (length + a.rows + a.cols - 2));
}

double systolic_cycles(const LayerDescriptor& layer, const Dims& in, SystolicArray a) {
  if (const auto* conv = std::get_if<Conv2d>(&layer)) {
    const Dims o = conv->geometry.output_dims(in, conv->out_c);
    return systolic_cycles(conv->out_c, std::uint64_t{o.h} * o.w, conv->geometry.patch_length(), a);
  }
  if (const auto* lin = std::get_if<Linear>(&layer)) return systolic_cycles(lin->out_features, 1, lin->in_features, a);
  throw ConfigError(std::string("systolic_cycles: ") + layer_kind_name(layer) + " is not a dot-product layer");
}

CostReport fold_trace(const CostTrace& trace, const CostTable& table) {
  struct Acc {
    LayerCost cost;
    bool pending_tile = false;
    double max_fill = 0;
  };
  std::map<std::uint32_t, Acc> acc;
  for (const TraceEvent& e : trace.events) {
    Acc& a = acc[e.layer];
    LayerCost& l = a.cost;
    switch (e.kind) {
      case TraceEvent::Kind::kReconfigure:
        break;
      case TraceEvent::Kind::kWriteRows: {
        const CamCost& c = table.at(e.rows, e.word_bits);
        l.row_writes += e.count;
        l.cycles += e.count * c.write_cycles_per_row;
        l.energy_pj += e.count * c.write_energy_pj;
        a.pending_tile = true;
        break;
      }
      case TraceEvent::Kind::kSearch: {
        const CamCost& c = table.at(e.rows, e.word_bits);
        ++l.searches;
        l.cycles += c.search_cycles + table.finalize_cycles;
        l.energy_pj += c.search_energy_pj + e.count * table.finalize_energy_pj;
        if (a.pending_tile) {
          const double fill = static_cast<double>(e.count) / e.rows;
          ++l.tiles;
          l.tile_fill_sum += fill;
          a.max_fill = std::max(a.max_fill, fill);
          a.pending_tile = false;
        }
        break;
      }
      case TraceEvent::Kind::kTransform:
        l.cycles += e.count * table.transform_cycles;
        l.energy_pj += static_cast<double>(e.count) * e.aux * e.word_bits * table.transform_energy_pj_per_cell;
        break;
      case TraceEvent::Kind::kPostOp:
        l.cycles += e.count * table.post_cycles_per_element;
        l.energy_pj += e.count * table.post_energy_pj_per_element;
        break;
    }
  }
  for (const auto& [layer, meta] : trace.dot_layers) (void)acc[layer];

  CostReport report;
  std::uint64_t tiles = 0;
  double fill = 0, peak_sum = 0, baseline = 0;
  std::size_t dot_count = 0;
  for (auto& [layer, a] : acc) {
    LayerCost l = a.cost;
    l.layer = layer;
    if (const auto it = trace.dot_layers.find(layer); it != trace.dot_layers.end()) {
      const DotLayerMeta& m = it->second;
      l.kind = "dot";
      l.schedule = m;
      l.utilization = l.tiles ? l.tile_fill_sum / static_cast<double>(l.tiles) : 0.0;
      l.utilization_peak = a.max_fill;
      l.baseline_cycles = systolic_cycles(m.kernels, m.patches, m.length) * m.runs;
      baseline += *l.baseline_cycles;
      peak_sum += l.utilization_peak;
      ++dot_count;
    } else {
      l.kind = "post";
    }
    report.searches += l.searches;
    report.row_writes += l.row_writes;
    report.cycles += l.cycles;
    report.energy_pj += l.energy_pj;
    tiles += l.tiles;
    fill += l.tile_fill_sum;
    report.layers.push_back(std::move(l));
  }
  report.utilization = tiles ? fill / static_cast<double>(tiles) : 0.0;
  report.utilization_peak = dot_count ? peak_sum / static_cast<double>(dot_count) : 0.0;
  if (dot_count) report.baseline_cycles = baseline;
  return report;
}

CostReport systolic_report(const CostTrace& trace, SystolicArray array) {
  CostReport report;
  report.has_energy = false;
  for (const auto& [layer, m] : trace.dot_layers) {
    LayerCost l;
    l.layer = layer;
    l.kind = "dot";
    l.schedule = m;
    l.has_energy = false;
    l.cycles = systolic_cycles(m.kernels, m.patches, m.length, array) * m.runs;
    report.cycles += l.cycles;
    report.layers.push_back(std::move(l));
  }
  return report;
}

RatioSummary compare(const CostReport& cam, const CostReport& baseline) {
  auto dot_ids = [](const CostReport& r) {
    std::vector<std::uint32_t> ids;
    for (const LayerCost& l : r.layers)
      if (l.kind == "dot") ids.push_back(l.layer);
    return ids;
  };
  const auto ids = dot_ids(cam);
  if (ids != dot_ids(baseline)) throw ConfigError("compare: reports cover different dot-product layers");
  RatioSummary out;
  for (std::uint32_t id : ids) {
    const LayerCost& a = cam.layer(id);
    const LayerCost& b = baseline.layer(id);
    Ratio r;
    r.layer = id;
    if (a.cycles > 0) r.cycles = b.cycles / a.cycles;
    if (a.has_energy && b.has_energy && a.energy_pj > 0) r.energy = b.energy_pj / a.energy_pj;
    out.layers.push_back(r);
  }
  if (cam.cycles > 0) out.total_cycles = baseline.cycles / cam.cycles;
  if (cam.has_energy && baseline.has_energy && cam.energy_pj > 0)
    out.total_energy = baseline.energy_pj / cam.energy_pj;
  return out;
}

namespace {

// Mirrors NetworkRunner::run_dot + run_dot_layer CAM call order.
struct ScheduleEmitter {
  CostTrace& trace;
  std::uint32_t rows;
  std::uint32_t tile = 0;
  bool searched = false;

  void dot_layer(std::uint32_t layer, Dataflow dataflow, std::uint32_t k, std::uint32_t patches,
                 std::uint32_t kernels, std::uint32_t length, bool online) {
    if (online)
      for (std::uint32_t p = 0; p < patches; ++p)
        trace.events.push_back({TraceEvent::Kind::kTransform, layer, 0, k, 1, 0, length});
    std::vector<CamEvent> cam;
    cam.push_back({CamEvent::Kind::kReconfigure, k, 0, tile});
    const bool ws = dataflow == Dataflow::kWeightStationary;
    const std::uint32_t stored = ws ? kernels : patches;
    const std::uint32_t queries = ws ? patches : kernels;
    for (std::uint32_t base = 0; base < stored; base += rows) {
      const std::uint32_t fill = std::min(rows, stored - base);
      for (std::uint32_t r = 0; r < fill; ++r) {
        if (searched) {
          ++tile;
          searched = false;
        }
        cam.push_back({CamEvent::Kind::kWriteRow, k, 1, tile});
      }
      for (std::uint32_t q = 0; q < queries; ++q) {
        cam.push_back({CamEvent::Kind::kSearch, k, fill, tile});
        searched = true;
      }
    }
    trace.append_cam_events(layer, rows, cam);
    CostTrace one;
    one.dot_layers.emplace(layer, DotLayerMeta{dataflow, rows, k, patches, kernels, length, 1});
    trace.append(one);
  }

  void post(std::uint32_t layer, std::size_t elements) {
    trace.events.push_back(
        {TraceEvent::Kind::kPostOp, layer, 0, 0, static_cast<std::uint32_t>(elements), 0});
  }
};

}  // namespace

CostTrace schedule_trace(const NetworkModel& model, Dataflow dataflow, std::uint32_t rows,
                         const std::vector<std::size_t>& hash_lengths, std::uint32_t runs) {
  CamConfig{rows}.validate();
  const auto dot = model.dot_layers();
  if (hash_lengths.size() != dot.size())
    throw ConfigError("schedule_trace: " + std::to_string(hash_lengths.size()) + " hash lengths for " +
                      std::to_string(dot.size()) + " dot-product layers");
  for (std::size_t k : hash_lengths)
    if (!is_allowed_word_bits(k)) throw ConfigError("hash length " + std::to_string(k) + " not allowed");
  const std::vector<Dims> dims = model.infer_dims();
  CostTrace trace;
  for (std::uint32_t run = 0; run < runs; ++run) {
    ScheduleEmitter emit{trace, rows};
    std::size_t d = 0;
    for (std::size_t i = 0; i < model.layers.size(); ++i) {
      const auto li = static_cast<std::uint32_t>(i);
      const LayerDescriptor& layer = model.layers[i];
      const auto k = static_cast<std::uint32_t>(d < hash_lengths.size() ? hash_lengths[d] : 0);
      if (const auto* conv = std::get_if<Conv2d>(&layer)) {
        emit.dot_layer(li, dataflow, k, dims[i].h * dims[i].w, conv->out_c, conv->geometry.patch_length(), d > 0);
        if (conv->fused_relu) emit.post(li, dims[i].size());
        ++d;
      } else if (const auto* lin = std::get_if<Linear>(&layer)) {
        emit.dot_layer(li, dataflow, k, 1, lin->out_features, lin->in_features, d > 0);
        if (lin->fused_relu) emit.post(li, dims[i].size());
        ++d;
      } else if (!std::holds_alternative<Flatten>(layer)) {
        emit.post(li, dims[i].size());
      }
    }
  }
  return trace;
}

CostTrace schedule_conv_trace(const Dims& input, std::uint32_t kernels, const ConvGeometry& g,
                              Dataflow dataflow, std::uint32_t rows, std::size_t hash_length,
                              std::uint32_t runs) {
  NetworkModel model;
  model.input = input;
  Conv2d conv;
  conv.geometry = g;
  conv.out_c = kernels;
  conv.weights = RowMatrixXf::Zero(kernels, g.patch_length());
  model.layers.emplace_back(std::move(conv));
  return schedule_trace(model, dataflow, rows, {hash_length}, runs);
}

std::string report_csv(const CostReport& report, bool peak_utilization) {
  std::string out = "layer,dataflow,rows,word_bits,searches,writes,cycles,utilization,energy_pj,baseline_cycles\n";
  for (const LayerCost& l : report.layers) {
    out += std::to_string(l.layer) + ",";
    if (l.schedule)
      out += std::string(to_string(l.schedule->dataflow)) + "," + std::to_string(l.schedule->rows) + "," +
             std::to_string(l.schedule->word_bits) + ",";
    else
      out += "-,-,-,";
    out += std::to_string(l.searches) + "," + std::to_string(l.row_writes) + "," + num(l.cycles) + ",";
    out += (l.kind == "dot" ? num(peak_utilization ? l.utilization_peak : l.utilization) : std::string("-")) + ",";
    out += (l.has_energy ? num(l.energy_pj) : std::string("-")) + ",";
    out += (l.baseline_cycles ? num(*l.baseline_cycles) : std::string("-")) + "\n";
  }
  out += "total,-,-,-," + std::to_string(report.searches) + "," + std::to_string(report.row_writes) + "," +
         num(report.cycles) + "," + num(peak_utilization ? report.utilization_peak : report.utilization) + "," +
         (report.has_energy ? num(report.energy_pj) : std::string("-")) + "," +
         (report.baseline_cycles ? num(*report.baseline_cycles) : std::string("-")) + "\n";
  return out;
}

}  // namespace deepcam
