#pragma once

// Minimal static SVG line charts: polylines with NaN gaps, shaded bands and
// point markers on linear axes.

#include <string>
#include <vector>

namespace bora::svg {

struct Line {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;  // NaN breaks the line
  std::string color = "#1f77b4";
  bool dashed = false;
};

struct Band {
  std::vector<double> x;
  std::vector<double> lower;  // NaN on either side breaks the band
  std::vector<double> upper;
  std::string color = "#1f77b4";
  double opacity = 0.2;
};

struct Markers {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  std::string color = "#d62728";
};

struct Plot {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<Band> bands;
  std::vector<Line> lines;
  std::vector<Markers> markers;
  int width = 720;
  int height = 440;
};

std::string render(const Plot& plot);

// Categorical palette entry, cycling.
const char* palette(std::size_t index);

std::string escape_xml(const std::string& text);

}  // namespace bora::svg
