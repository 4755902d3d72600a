#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "deepcam/modelio.hpp"
#include "deepcam/network.hpp"
#include "deepcam/trace.hpp"

namespace deepcam {

/// Price of CAM work at one (rows, word_bits) geometry.
struct CamCost {
  double search_energy_pj = 0;
  double write_energy_pj = 0;  ///< per row write
  double search_cycles = 0;
  double write_cycles_per_row = 0;
};

/// Prices for folding a CostTrace. The built-in defaults are placeholders
/// that only respect the expected shape (search energy grows with both rows
/// and word length); they are not device data.
///
/// Config-file keys (KeyValueConfig):
///   search_energy_pj.<rows>x<bits>, write_energy_pj.<rows>x<bits>,
///   search_cycles.<rows>x<bits>, write_cycles_per_row.<rows>x<bits>,
///   finalize_energy_pj, finalize_cycles, transform_energy_pj_per_cell,
///   transform_cycles, post_energy_pj_per_element, post_cycles_per_element,
///   defaults = true|false   (false: start from an empty table)
struct CostTable {
  std::map<std::pair<std::uint32_t, std::uint32_t>, CamCost> cam;
  double finalize_energy_pj = 0;         ///< per (query, stored row) estimate: cosine + 2 multiplies + bias
  double finalize_cycles = 0;            ///< per search event (pipelined digital units)
  double transform_energy_pj_per_cell = 0;  ///< crossbar projection, per n*k cell, per patch
  double transform_cycles = 0;           ///< per online context
  double post_energy_pj_per_element = 0;
  double post_cycles_per_element = 0;

  static CostTable defaults();
  /// Overlays `cfg` onto the defaults (or onto an empty table if defaults = false).
  static CostTable from_config(const KeyValueConfig& cfg);
  KeyValueConfig to_config() const;

  /// Throws ConfigError when (rows, bits) has no entry.
  const CamCost& at(std::uint32_t rows, std::uint32_t word_bits) const;

  /// Throws ConfigError unless search energy strictly increases with rows
  /// at fixed width and with width at fixed rows over the present grid.
  void check_shape() const;
};

struct LayerCost {
  std::uint32_t layer = 0;
  std::string kind;  ///< "dot" or "post"
  std::optional<DotLayerMeta> schedule;
  std::uint64_t searches = 0;
  std::uint64_t row_writes = 0;
  std::uint64_t tiles = 0;
  double cycles = 0;
  double energy_pj = 0;
  double utilization = 0;        ///< mean valid_rows / rows over tiles
  double utilization_peak = 0;  ///< full-stream accounting: max tile fill
  double tile_fill_sum = 0;      ///< sum of per-tile fill, for merging
  bool has_energy = true;
  std::optional<double> baseline_cycles;
};

struct CostReport {
  std::vector<LayerCost> layers;  ///< ascending layer index
  std::uint64_t searches = 0;
  std::uint64_t row_writes = 0;
  double cycles = 0;
  double energy_pj = 0;
  double utilization = 0;        ///< mean over all tiles
  double utilization_peak = 0;  ///< mean over dot layers of their peak tile fill
  bool has_energy = true;
  std::optional<double> baseline_cycles;

  const LayerCost& layer(std::uint32_t index) const;
};

/// Folds every event through `table`. Baseline cycles of dot layers come
/// from systolic_cycles() of their schedule times their run count.
CostReport fold_trace(const CostTrace& trace, const CostTable& table);

struct SystolicArray {
  std::uint32_t rows = 14;
  std::uint32_t cols = 12;
};

/// Weight-stationary fill/drain model of a rows x cols MAC array:
///   ceil(kernels / cols) * ceil(positions / rows) * (length + rows + cols - 2)
double systolic_cycles(std::uint64_t kernels, std::uint64_t positions, std::uint64_t length,
                       SystolicArray array = {});
/// Same for a model layer fed an input of `in` dims; throws ConfigError for non-dot layers.
double systolic_cycles(const LayerDescriptor& layer, const Dims& in, SystolicArray array = {});

inline constexpr const char* kSystolicFormula =
    "ceil(K/cols)*ceil(P/rows)*(n+rows+cols-2), rows=14, cols=12";

/// Report of the systolic baseline alone (cycles only; energy absent).
CostReport systolic_report(const CostTrace& trace, SystolicArray array = {});

struct Ratio {
  std::uint32_t layer = 0;
  std::optional<double> cycles;  ///< baseline / cam
  std::optional<double> energy;
};

struct RatioSummary {
  std::vector<Ratio> layers;
  std::optional<double> total_cycles;
  std::optional<double> total_energy;
};

/// Per-layer and total baseline/cam ratios. Both reports must cover the same
/// dot layers (ConfigError otherwise); ratios appear only where both sides exist.
RatioSummary compare(const CostReport& cam, const CostReport& baseline);

/// Schedule-only trace of a model (no weights touched, no hashing): the
/// same event stream the executor emits for `runs` inferences.
CostTrace schedule_trace(const NetworkModel& model, Dataflow dataflow, std::uint32_t rows,
                         const std::vector<std::size_t>& hash_lengths, std::uint32_t runs = 1);

/// Trace of a single conv layer in isolation (geometry-only dry run).
CostTrace schedule_conv_trace(const Dims& input, std::uint32_t kernels, const ConvGeometry& g,
                              Dataflow dataflow, std::uint32_t rows, std::size_t hash_length,
                              std::uint32_t runs = 1);

/// CSV with header
/// layer,dataflow,rows,word_bits,searches,writes,cycles,utilization,energy_pj,baseline_cycles
/// One row per dot layer plus a "total" row. Utilization uses the chosen accounting.
std::string report_csv(const CostReport& report, bool peak_utilization = false);

}  // namespace deepcam
