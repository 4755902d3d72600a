#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <vector>

#include "deepcam/cam.hpp"

namespace deepcam {

enum class Dataflow : std::uint8_t { kWeightStationary, kActivationStationary };

const char* to_string(Dataflow d) noexcept;
/// Accepts "ws"/"as" and the long names; throws ConfigError otherwise.
Dataflow parse_dataflow(std::string_view text);

/// One priced unit of work. CAM events keep their CamEvent meaning; the
/// remaining kinds come from the digital post-processing path.
struct TraceEvent {
  enum class Kind : std::uint8_t {
    kReconfigure,
    kWriteRows,   ///< `count` consecutive row writes within one tile
    kSearch,      ///< one parallel search; `count` valid rows compared
    kTransform,   ///< online activation contexts; `count` patches of length `aux`
    kPostOp,      ///< elementwise digital work (relu, pooling, batchnorm, add)
  };

  Kind kind;
  std::uint32_t layer;
  std::uint32_t rows;
  std::uint32_t word_bits;
  std::uint32_t count;
  std::uint32_t tile;
  std::uint32_t aux = 0;

  friend bool operator==(const TraceEvent&, const TraceEvent&) = default;
};

/// Schedule summary of one dot-product layer (filled once per layer run).
struct DotLayerMeta {
  Dataflow dataflow = Dataflow::kWeightStationary;
  std::uint32_t rows = 0;
  std::uint32_t word_bits = 0;
  std::uint32_t patches = 0;  ///< activation contexts per run
  std::uint32_t kernels = 0;  ///< weight contexts per run
  std::uint32_t length = 0;   ///< flattened kernel length n
  std::uint32_t runs = 0;     ///< number of inferences folded in

  friend bool operator==(const DotLayerMeta&, const DotLayerMeta&) = default;
};

struct CostTrace {
  std::vector<TraceEvent> events;
  std::map<std::uint32_t, DotLayerMeta> dot_layers;

  /// Appends `other`; dot-layer run counts add up.
  void append(const CostTrace& other);

  /// Converts a drained CAM log, coalescing consecutive writes of one tile.
  void append_cam_events(std::uint32_t layer, std::uint32_t rows,
                         const std::vector<CamEvent>& cam_events);

  friend bool operator==(const CostTrace&, const CostTrace&) = default;
};

}  // namespace deepcam
