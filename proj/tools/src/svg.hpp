#pragma once

// Minimal SVG line/scatter plots: a grid of panels, each with its own axes.

#include <string>
#include <vector>

namespace relaxor::cli {

enum class Stroke { Solid, Dashed, Dotted, DashDot };

struct Series {
  std::vector<double> x;
  std::vector<double> y;
  std::string label;
  std::string color = "#1f4e9c";
  Stroke stroke = Stroke::Solid;
  double width = 1.6;
  bool scatter = false;  // draw dots instead of a polyline
};

struct Marker {
  double x = 0.0;
  double y = 0.0;
  std::string label;
};

struct Panel {
  std::string title;
  std::string xlabel;
  std::string ylabel;
  std::vector<Series> series;
  std::vector<Marker> markers;
  std::vector<double> hlines;  // thin reference lines (e.g. nullclines)
  std::vector<double> vlines;
};

struct Figure {
  std::vector<Panel> panels;
  int columns = 2;
  double panel_width = 420.0;
  double panel_height = 320.0;
};

std::string render_svg(const Figure& fig);

/// Every k-th point so that at most `max_points` remain (first and last kept).
Series decimate(Series s, std::size_t max_points = 4000);

}  // namespace relaxor::cli
