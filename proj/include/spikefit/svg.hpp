#pragma once

// Minimal self-contained SVG line charts for experiment tables.

#include <string>
#include <vector>

namespace spikefit::svg {

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

struct LineChart {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<Series> series;
  int width = 640;
  int height = 400;
};

// Non-finite points are skipped. Output depends only on the chart contents.
std::string render(const LineChart& chart);
void write(const std::string& path, const LineChart& chart);

}  // namespace spikefit::svg
