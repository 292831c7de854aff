#pragma once

#include <optional>
#include <string>
#include <vector>

namespace lmpsh {

struct SvgSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  std::string color = "#000000";
  bool dashed = false;
};

struct SvgPanel {
  std::string title;
  std::string xlabel;
  std::string ylabel;
  std::vector<SvgSeries> series;
  std::optional<double> ymin;
  std::optional<double> ymax;
  std::vector<double> hlines;  // reference lines, e.g. y = 0
};

/// Line charts laid out on a grid, `columns` panels per row.
std::string render_svg(const std::vector<SvgPanel>& panels, int columns = 1);

}  // namespace lmpsh
