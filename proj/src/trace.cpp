#include "deepcam/trace.hpp"

#include <string>

#include "deepcam/error.hpp"

namespace deepcam {

const char* to_string(Dataflow d) noexcept {
  return d == Dataflow::kWeightStationary ? "ws" : "as";
}

Dataflow parse_dataflow(std::string_view text) {
  if (text == "ws" || text == "weight_stationary" || text == "weight-stationary")
    return Dataflow::kWeightStationary;
  if (text == "as" || text == "activation_stationary" || text == "activation-stationary")
    return Dataflow::kActivationStationary;
  throw ConfigError("unknown dataflow '" + std::string(text) + "' (expected ws or as)");
}

void CostTrace::append(const CostTrace& other) {
  events.insert(events.end(), other.events.begin(), other.events.end());
  for (const auto& [layer, meta] : other.dot_layers) {
    auto [it, inserted] = dot_layers.try_emplace(layer, meta);
    if (inserted) continue;
    DotLayerMeta& mine = it->second;
    DotLayerMeta probe = meta;
    probe.runs = mine.runs;
    if (!(probe == mine))
      throw ConfigError("CostTrace::append: layer " + std::to_string(layer) +
                        " scheduled differently in the two traces");
    mine.runs += meta.runs;
  }
}

void CostTrace::append_cam_events(std::uint32_t layer, std::uint32_t rows,
                                  const std::vector<CamEvent>& cam_events) {
  for (const CamEvent& e : cam_events) {
    const std::uint32_t tile = e.tile;
    switch (e.kind) {
      case CamEvent::Kind::kReconfigure:
        events.push_back({TraceEvent::Kind::kReconfigure, layer, rows, e.word_bits, 0, tile});
        break;
      case CamEvent::Kind::kWriteRow:
        if (!events.empty()) {
          TraceEvent& last = events.back();
          if (last.kind == TraceEvent::Kind::kWriteRows && last.layer == layer &&
              last.tile == tile && last.word_bits == e.word_bits) {
            last.count += e.rows_touched;
            break;
          }
        }
        events.push_back({TraceEvent::Kind::kWriteRows, layer, rows, e.word_bits, e.rows_touched, tile});
        break;
      case CamEvent::Kind::kSearch:
        events.push_back({TraceEvent::Kind::kSearch, layer, rows, e.word_bits, e.rows_touched, tile});
        break;
    }
  }
}

}  // namespace deepcam
