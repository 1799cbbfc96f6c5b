#pragma once

#include <string>
#include <vector>

namespace rockfrag {

struct PlotSeries {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
  bool markers = false;  // points instead of a polyline
  std::string color = "#1f77b4";
};

struct Plot {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_x = false;
  std::vector<PlotSeries> series;
  int width = 640;
  int height = 420;
};

/// Self-contained SVG document; non-finite points are skipped.
std::string render_svg(const Plot& plot);

}  // namespace rockfrag
