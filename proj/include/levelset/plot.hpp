#pragma once

// Deterministic SVG line charts.

#include <string>
#include <vector>

#include "levelset/bench.hpp"
#include "levelset/io.hpp"

namespace levelset {

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
  /// Draw as a right-continuous step function.
  bool step = false;
};

struct ChartSpec {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_y = false;
  int width = 640;
  int height = 400;
};

/// Same inputs give byte-identical output. With log_y, non-positive points split the
/// polyline. Throws InvalidArgument when no series has a drawable point.
std::string line_chart_svg(const ChartSpec& spec, const std::vector<Series>& series);

/// Plot one column of each trace CSV against k. "gap" plots f - f_star with f_star the
/// smallest f over all inputs unless given.
struct TracePlotInput {
  std::string name;
  CsvTable table;
};
std::string trace_plot_svg(const std::vector<TracePlotInput>& traces, const std::string& column,
                           double f_star, bool has_f_star);

/// One step curve per method.
std::string profile_plot_svg(const ProfileTable& table);

}  // namespace levelset
