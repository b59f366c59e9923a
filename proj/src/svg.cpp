#include "mpcbo/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace mpcbo {

namespace {

constexpr double kWidth = 720, kHeight = 480;
constexpr double kLeft = 70, kRight = 20, kTop = 40, kBottom = 50;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  void expand(double v) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  bool valid() const { return lo <= hi; }
};

// Round tick positions covering [lo, hi].
std::vector<double> linear_ticks(double lo, double hi) {
  double span = hi - lo;
  if (!(span > 0.0)) return {lo};
  double raw = span / 5.0;
  double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 5.0, 10.0})
    if (raw <= m * mag) {
      step = m * mag;
      break;
    }
  std::vector<double> ticks;
  for (double t = std::ceil(lo / step) * step; t <= hi + 1e-12 * span; t += step)
    ticks.push_back(t);
  return ticks;
}

}  // namespace

void SvgPlot::write(std::ostream& out) const {
  Range xr, yr;
  auto y_value = [&](double v) { return log_y ? std::log10(v) : v; };
  auto usable = [&](double v) { return !log_y || v > 0.0; };

  for (const auto& s : series)
    for (std::size_t i = 0; i < s.x.size(); ++i)
      if (std::isfinite(s.x[i]) && std::isfinite(s.y[i]) && usable(s.y[i])) {
        xr.expand(s.x[i]);
        yr.expand(y_value(s.y[i]));
      }
  for (const auto& b : bands)
    for (std::size_t i = 0; i < b.x.size(); ++i) {
      if (!std::isfinite(b.x[i])) continue;
      if (std::isfinite(b.y_lo[i]) && usable(b.y_lo[i])) {
        xr.expand(b.x[i]);
        yr.expand(y_value(b.y_lo[i]));
      }
      if (std::isfinite(b.y_hi[i]) && usable(b.y_hi[i])) {
        xr.expand(b.x[i]);
        yr.expand(y_value(b.y_hi[i]));
      }
    }
  if (!xr.valid()) {
    xr = {0.0, 1.0};
    yr = {0.0, 1.0};
  }
  if (xr.hi == xr.lo) xr.hi = xr.lo + 1.0;
  if (yr.hi == yr.lo) yr.hi = yr.lo + 1.0;
  double pad = 0.03 * (yr.hi - yr.lo);
  yr.lo -= pad;
  yr.hi += pad;

  auto px = [&](double x) {
    return kLeft + (x - xr.lo) / (xr.hi - xr.lo) * (kWidth - kLeft - kRight);
  };
  auto py = [&](double y) {
    double t = (y_value(y) - yr.lo) / (yr.hi - yr.lo);
    return kHeight - kBottom - t * (kHeight - kTop - kBottom);
  };

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth
      << "\" height=\"" << kHeight << "\" viewBox=\"0 0 " << kWidth << ' '
      << kHeight << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

  // Axes and ticks.
  out << "<g stroke=\"#333\" stroke-width=\"1\" fill=\"none\">\n";
  out << "<path d=\"M" << fmt(kLeft) << ' ' << fmt(kTop) << " V" << fmt(kHeight - kBottom)
      << " H" << fmt(kWidth - kRight) << "\"/>\n";
  out << "</g>\n";

  out << "<g font-family=\"sans-serif\" font-size=\"11\" fill=\"#333\">\n";
  for (double t : linear_ticks(xr.lo, xr.hi)) {
    double x = px(t);
    out << "<line x1=\"" << fmt(x) << "\" y1=\"" << fmt(kHeight - kBottom)
        << "\" x2=\"" << fmt(x) << "\" y2=\"" << fmt(kHeight - kBottom + 4)
        << "\" stroke=\"#333\"/>\n";
    out << "<text x=\"" << fmt(x) << "\" y=\"" << fmt(kHeight - kBottom + 16)
        << "\" text-anchor=\"middle\">" << fmt(t) << "</text>\n";
  }
  for (double t : linear_ticks(yr.lo, yr.hi)) {
    double y = kHeight - kBottom -
               (t - yr.lo) / (yr.hi - yr.lo) * (kHeight - kTop - kBottom);
    out << "<line x1=\"" << fmt(kLeft - 4) << "\" y1=\"" << fmt(y) << "\" x2=\""
        << fmt(kLeft) << "\" y2=\"" << fmt(y) << "\" stroke=\"#333\"/>\n";
    std::string label = log_y ? ("1e" + fmt(t)) : fmt(t);
    out << "<text x=\"" << fmt(kLeft - 8) << "\" y=\"" << fmt(y + 4)
        << "\" text-anchor=\"end\">" << label << "</text>\n";
  }
  out << "<text x=\"" << fmt((kLeft + kWidth - kRight) / 2) << "\" y=\""
      << fmt(kHeight - 12) << "\" text-anchor=\"middle\">" << x_label
      << "</text>\n";
  out << "<text x=\"16\" y=\"" << fmt((kTop + kHeight - kBottom) / 2)
      << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
      << fmt((kTop + kHeight - kBottom) / 2) << ")\">" << y_label << "</text>\n";
  out << "<text x=\"" << fmt(kWidth / 2) << "\" y=\"24\" text-anchor=\"middle\" "
      << "font-size=\"14\">" << title << "</text>\n";
  out << "</g>\n";

  for (const auto& b : bands) {
    out << "<polygon fill=\"" << b.color << "\" fill-opacity=\"" << fmt(b.opacity)
        << "\" stroke=\"none\" points=\"";
    for (std::size_t i = 0; i < b.x.size(); ++i)
      if (usable(b.y_hi[i])) out << fmt(px(b.x[i])) << ',' << fmt(py(b.y_hi[i])) << ' ';
    for (std::size_t i = b.x.size(); i-- > 0;)
      if (usable(b.y_lo[i])) out << fmt(px(b.x[i])) << ',' << fmt(py(b.y_lo[i])) << ' ';
    out << "\"/>\n";
  }

  for (const auto& s : series) {
    out << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\""
        << fmt(s.width) << "\" points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i)
      if (usable(s.y[i])) out << fmt(px(s.x[i])) << ',' << fmt(py(s.y[i])) << ' ';
    out << "\"/>\n";
  }

  // Legend for labeled series.
  double ly = kTop + 8;
  out << "<g font-family=\"sans-serif\" font-size=\"11\">\n";
  for (const auto& s : series) {
    if (s.label.empty()) continue;
    out << "<line x1=\"" << fmt(kWidth - kRight - 150) << "\" y1=\"" << fmt(ly)
        << "\" x2=\"" << fmt(kWidth - kRight - 126) << "\" y2=\"" << fmt(ly)
        << "\" stroke=\"" << s.color << "\" stroke-width=\"2\"/>\n";
    out << "<text x=\"" << fmt(kWidth - kRight - 120) << "\" y=\"" << fmt(ly + 4)
        << "\">" << s.label << "</text>\n";
    ly += 16;
  }
  out << "</g>\n</svg>\n";
}

void SvgPlot::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  write(out);
}

}  // namespace mpcbo
