#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace mpcbo {

struct SvgSeries {
  std::vector<double> x, y;
  std::string color = "#1f77b4";
  std::string label;
  double width = 1.5;
};

/// Shaded region between y_lo and y_hi, drawn behind the lines.
struct SvgBand {
  std::vector<double> x, y_lo, y_hi;
  std::string color = "#1f77b4";
  double opacity = 0.2;
};

/// Minimal self-contained line plot. Non-positive values are dropped from
/// log-scaled axes.
struct SvgPlot {
  std::string title, x_label, y_label;
  bool log_y = false;
  std::vector<SvgSeries> series;
  std::vector<SvgBand> bands;

  void write(std::ostream& out) const;
  void save(const std::string& path) const;
};

}  // namespace mpcbo
