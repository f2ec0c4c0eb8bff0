#pragma once

#include <string>
#include <vector>

namespace tgcmpc::plot {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  bool dashed = false;
};

/// Shaded region between lo and hi.
struct Band {
  std::string label;
  std::vector<double> x;
  std::vector<double> lo;
  std::vector<double> hi;
};

struct Panel {
  std::string title;
  std::string xlabel;
  std::vector<Series> series;
  std::vector<Band> bands;
  std::vector<double> hlines;  // e.g. constraint bounds
};

/// Panels stacked vertically in one SVG document.
std::string render_svg(const std::vector<Panel>& panels, int width = 720, int panel_height = 220);

}  // namespace tgcmpc::plot
