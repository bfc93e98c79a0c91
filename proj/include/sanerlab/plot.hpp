#pragma once

#include <string>
#include <vector>

// Minimal deterministic SVG 1.1 line charts. Rendering is a pure function of
// its inputs: fixed canvas, fixed palette, fixed-precision coordinates, no
// timestamps, so identical calls produce byte-identical markup.

namespace sanerlab::plot {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;  // NaN entries break the polyline into segments
};

// Throws std::invalid_argument when there is nothing finite to draw or a
// series has mismatched x/y lengths.
std::string render_line_chart(const std::string& title, const std::string& x_label,
                              const std::string& y_label, const std::vector<Series>& series);

}  // namespace sanerlab::plot
