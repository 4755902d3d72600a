#pragma once

// Minimal static SVG charts for the CSV reports.

#include <string>
#include <vector>

namespace deepcam::plot {

struct Series {
  std::string name;
  std::vector<double> values;
};

/// Grouped bars, one group per category.
std::string bar_chart(const std::string& title, const std::vector<std::string>& categories,
                      const std::vector<Series>& series, bool log_y = false);

/// Polylines over shared x positions.
std::string line_chart(const std::string& title, const std::string& x_label, const std::vector<double>& x,
                       const std::vector<Series>& series, bool log_y = false);

}  // namespace deepcam::plot
