#pragma once

#include <optional>
#include <string>
#include <vector>

namespace exot {

struct ChartSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  /// Symmetric error bars, empty for none.
  std::vector<double> err;
};

struct LineChart {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<ChartSeries> series;
  /// Horizontal reference line.
  std::optional<double> reference;
  std::string reference_label;
};

/// Static SVG with a fixed 800x600 viewBox. Output is a pure function of
/// the chart contents.
std::string render_svg(const LineChart& chart);

}  // namespace exot
