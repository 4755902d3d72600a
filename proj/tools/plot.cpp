#include "plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace deepcam::plot {
namespace {

constexpr double kWidth = 640, kHeight = 400;
constexpr double kLeft = 70, kRight = 150, kTop = 40, kBottom = 60;
constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

std::string esc(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

struct Axis {
  double lo = 0, hi = 1;
  bool log = false;

  double map(double v) const {
    const double a = log ? std::log10(lo) : lo;
    const double b = log ? std::log10(hi) : hi;
    const double t = ((log ? std::log10(std::max(v, lo)) : v) - a) / (b - a);
    return kTop + (1.0 - t) * (kHeight - kTop - kBottom);
  }
};

Axis y_axis(const std::vector<Series>& series, bool log_y) {
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& s : series)
    for (double v : s.values) {
      if (!std::isfinite(v) || (log_y && v <= 0)) continue;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  if (!std::isfinite(lo)) lo = 0, hi = 1;
  if (log_y) {
    lo = std::pow(10.0, std::floor(std::log10(lo)));
    hi = std::pow(10.0, std::ceil(std::log10(hi)));
    if (hi <= lo) hi = lo * 10;
  } else {
    lo = std::min(lo, 0.0);
    if (hi <= lo) hi = lo + 1;
  }
  return {lo, hi, log_y};
}

void frame(std::ostringstream& o, const std::string& title, const Axis& y) {
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
    << "\" font-family=\"sans-serif\" font-size=\"11\">\n"
    << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    << "<text x=\"" << kWidth / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << esc(title)
    << "</text>\n";
  const double x0 = kLeft, x1 = kWidth - kRight;
  for (int i = 0; i <= 4; ++i) {
    const double v = y.log ? std::pow(10.0, std::log10(y.lo) + i * (std::log10(y.hi) - std::log10(y.lo)) / 4)
                           : y.lo + i * (y.hi - y.lo) / 4;
    const double py = y.map(v);
    o << "<line x1=\"" << x0 << "\" y1=\"" << py << "\" x2=\"" << x1 << "\" y2=\"" << py
      << "\" stroke=\"#ddd\"/>\n<text x=\"" << x0 - 6 << "\" y=\"" << py + 4 << "\" text-anchor=\"end\">"
      << num(v) << "</text>\n";
  }
  o << "<line x1=\"" << x0 << "\" y1=\"" << kTop << "\" x2=\"" << x0 << "\" y2=\"" << kHeight - kBottom
    << "\" stroke=\"black\"/>\n<line x1=\"" << x0 << "\" y1=\"" << kHeight - kBottom << "\" x2=\"" << x1
    << "\" y2=\"" << kHeight - kBottom << "\" stroke=\"black\"/>\n";
}

void legend(std::ostringstream& o, const std::vector<Series>& series) {
  for (std::size_t i = 0; i < series.size(); ++i) {
    const double py = kTop + 10 + 18.0 * static_cast<double>(i);
    o << "<rect x=\"" << kWidth - kRight + 12 << "\" y=\"" << py - 9 << "\" width=\"10\" height=\"10\" fill=\""
      << kPalette[i % 6] << "\"/>\n<text x=\"" << kWidth - kRight + 28 << "\" y=\"" << py << "\">"
      << esc(series[i].name) << "</text>\n";
  }
}

}  // namespace

std::string bar_chart(const std::string& title, const std::vector<std::string>& categories,
                      const std::vector<Series>& series, bool log_y) {
  std::ostringstream o;
  const Axis y = y_axis(series, log_y);
  frame(o, title, y);
  const double span = (kWidth - kRight - kLeft) / std::max<std::size_t>(categories.size(), 1);
  const double bar = span * 0.8 / std::max<std::size_t>(series.size(), 1);
  const double base = y.map(y.log ? y.lo : 0.0);
  for (std::size_t c = 0; c < categories.size(); ++c) {
    const double gx = kLeft + span * static_cast<double>(c) + span * 0.1;
    for (std::size_t s = 0; s < series.size(); ++s) {
      if (c >= series[s].values.size() || !std::isfinite(series[s].values[c])) continue;
      const double top = y.map(series[s].values[c]);
      o << "<rect x=\"" << gx + bar * static_cast<double>(s) << "\" y=\"" << std::min(top, base)
        << "\" width=\"" << bar << "\" height=\"" << std::abs(base - top) << "\" fill=\"" << kPalette[s % 6]
        << "\"/>\n";
    }
    o << "<text x=\"" << gx + span * 0.4 << "\" y=\"" << kHeight - kBottom + 16 << "\" text-anchor=\"middle\">"
      << esc(categories[c]) << "</text>\n";
  }
  legend(o, series);
  o << "</svg>\n";
  return o.str();
}

std::string line_chart(const std::string& title, const std::string& x_label, const std::vector<double>& x,
                       const std::vector<Series>& series, bool log_y) {
  std::ostringstream o;
  const Axis y = y_axis(series, log_y);
  frame(o, title, y);
  const double x0 = kLeft, x1 = kWidth - kRight;
  // Evenly spaced categories keep power-of-two sweeps readable.
  auto px = [&](std::size_t i) {
    return x.size() < 2 ? (x0 + x1) / 2 : x0 + 10 + (x1 - x0 - 20) * static_cast<double>(i) / (x.size() - 1);
  };
  for (std::size_t i = 0; i < x.size(); ++i)
    o << "<text x=\"" << px(i) << "\" y=\"" << kHeight - kBottom + 16 << "\" text-anchor=\"middle\">" << num(x[i])
      << "</text>\n";
  o << "<text x=\"" << (x0 + x1) / 2 << "\" y=\"" << kHeight - 20 << "\" text-anchor=\"middle\">" << esc(x_label)
    << "</text>\n";
  for (std::size_t s = 0; s < series.size(); ++s) {
    o << "<polyline fill=\"none\" stroke=\"" << kPalette[s % 6] << "\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < x.size() && i < series[s].values.size(); ++i)
      o << px(i) << ',' << y.map(series[s].values[i]) << ' ';
    o << "\"/>\n";
  }
  legend(o, series);
  o << "</svg>\n";
  return o.str();
}

}  // namespace deepcam::plot
