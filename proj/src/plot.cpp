#include "sanerlab/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace sanerlab::plot {
namespace {

constexpr double kWidth = 860.0;
constexpr double kHeight = 500.0;
constexpr double kLeft = 70.0;
constexpr double kRight = 690.0;   // legend lives right of this
constexpr double kTop = 50.0;
constexpr double kBottom = 440.0;

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                    "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};
constexpr std::size_t kPaletteSize = sizeof(kPalette) / sizeof(kPalette[0]);

std::string coord(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

struct Range {
  double lo = 0.0;
  double hi = 1.0;
};

double nice_step(double raw) {
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  const double unit = raw / mag;
  double nice = 10.0;
  if (unit <= 1.0) nice = 1.0;
  else if (unit <= 2.0) nice = 2.0;
  else if (unit <= 2.5) nice = 2.5;
  else if (unit <= 5.0) nice = 5.0;
  return nice * mag;
}

std::vector<double> ticks_for(const Range& r) {
  const double step = nice_step((r.hi - r.lo) / 5.0);
  std::vector<double> ticks;
  const double first = std::ceil(r.lo / step - 1e-9);
  for (double m = first; m * step <= r.hi + 1e-9 * step; m += 1.0) {
    ticks.push_back(m * step);
  }
  return ticks;
}

}  // namespace

std::string render_line_chart(const std::string& title, const std::string& x_label,
                              const std::string& y_label, const std::vector<Series>& series) {
  bool any_point = false;
  Range rx, ry;
  for (const Series& s : series) {
    if (s.x.size() != s.y.size()) {
      throw std::invalid_argument("series '" + s.label + "' has mismatched x/y lengths");
    }
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      if (!any_point) {
        rx = {s.x[i], s.x[i]};
        ry = {s.y[i], s.y[i]};
        any_point = true;
      } else {
        rx.lo = std::min(rx.lo, s.x[i]);
        rx.hi = std::max(rx.hi, s.x[i]);
        ry.lo = std::min(ry.lo, s.y[i]);
        ry.hi = std::max(ry.hi, s.y[i]);
      }
    }
  }
  if (!any_point) throw std::invalid_argument("nothing finite to plot");
  if (rx.hi == rx.lo) {
    rx.lo -= 1.0;
    rx.hi += 1.0;
  }
  if (ry.hi == ry.lo) {
    ry.lo -= 1.0;
    ry.hi += 1.0;
  } else {
    const double pad = 0.05 * (ry.hi - ry.lo);
    ry.lo -= pad;
    ry.hi += pad;
  }

  auto px = [&rx](double x) { return kLeft + (x - rx.lo) / (rx.hi - rx.lo) * (kRight - kLeft); };
  auto py = [&ry](double y) { return kBottom - (y - ry.lo) / (ry.hi - ry.lo) * (kBottom - kTop); };

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"860\" "
         "height=\"500\" viewBox=\"0 0 860 500\">\n";
  svg += "<rect x=\"0\" y=\"0\" width=\"860\" height=\"500\" fill=\"#ffffff\"/>\n";
  svg += "<text x=\"" + coord((kLeft + kRight) / 2.0) +
         "\" y=\"28\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">" +
         escape(title) + "</text>\n";

  for (double t : ticks_for(rx)) {
    const std::string x = coord(px(t));
    svg += "<line x1=\"" + x + "\" y1=\"" + coord(kTop) + "\" x2=\"" + x + "\" y2=\"" +
           coord(kBottom) + "\" stroke=\"#e0e0e0\" stroke-width=\"1\"/>\n";
    svg += "<text x=\"" + x + "\" y=\"" + coord(kBottom + 18.0) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" +
           tick_label(t) + "</text>\n";
  }
  for (double t : ticks_for(ry)) {
    const std::string y = coord(py(t));
    svg += "<line x1=\"" + coord(kLeft) + "\" y1=\"" + y + "\" x2=\"" + coord(kRight) +
           "\" y2=\"" + y + "\" stroke=\"#e0e0e0\" stroke-width=\"1\"/>\n";
    svg += "<text x=\"" + coord(kLeft - 8.0) + "\" y=\"" + coord(py(t) + 4.0) +
           "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" + tick_label(t) +
           "</text>\n";
  }

  svg += "<line x1=\"" + coord(kLeft) + "\" y1=\"" + coord(kBottom) + "\" x2=\"" + coord(kRight) +
         "\" y2=\"" + coord(kBottom) + "\" stroke=\"#000000\" stroke-width=\"1\"/>\n";
  svg += "<line x1=\"" + coord(kLeft) + "\" y1=\"" + coord(kTop) + "\" x2=\"" + coord(kLeft) +
         "\" y2=\"" + coord(kBottom) + "\" stroke=\"#000000\" stroke-width=\"1\"/>\n";
  svg += "<text x=\"" + coord((kLeft + kRight) / 2.0) + "\" y=\"" + coord(kBottom + 40.0) +
         "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">" +
         escape(x_label) + "</text>\n";
  svg += "<text x=\"20\" y=\"" + coord((kTop + kBottom) / 2.0) +
         "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" "
         "transform=\"rotate(-90 20 " +
         coord((kTop + kBottom) / 2.0) + ")\">" + escape(y_label) + "</text>\n";

  for (std::size_t si = 0; si < series.size(); ++si) {
    const Series& s = series[si];
    const char* color = kPalette[si % kPaletteSize];
    std::string points;
    auto flush = [&svg, &points, color]() {
      if (points.empty()) return;
      svg += "<polyline fill=\"none\" stroke=\"";
      svg += color;
      svg += "\" stroke-width=\"1.5\" points=\"" + points + "\"/>\n";
      points.clear();
    };
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) {
        flush();
        continue;
      }
      if (!points.empty()) points += ' ';
      points += coord(px(s.x[i])) + "," + coord(py(s.y[i]));
    }
    flush();

    const double ly = kTop + 18.0 * static_cast<double>(si);
    svg += "<line x1=\"" + coord(kRight + 14.0) + "\" y1=\"" + coord(ly) + "\" x2=\"" +
           coord(kRight + 38.0) + "\" y2=\"" + coord(ly) + "\" stroke=\"";
    svg += color;
    svg += "\" stroke-width=\"2\"/>\n";
    svg += "<text x=\"" + coord(kRight + 44.0) + "\" y=\"" + coord(ly + 4.0) +
           "\" font-family=\"sans-serif\" font-size=\"12\">" + escape(s.label) + "</text>\n";
  }

  svg += "</svg>\n";
  return svg;
}

}  // namespace sanerlab::plot
