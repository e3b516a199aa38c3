#pragma once

#include <string>
#include <vector>

namespace rarefit::svg {

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
  bool steps = false;
};

struct Axes {
  std::string title;
  std::string x_label;
  std::string y_label;
  double x_min = 0.0;
  double x_max = 1.0;
  double y_min = 0.0;
  double y_max = 1.0;
};

/// Static line chart with a legend; one polyline per series.
std::string line_chart(const Axes& axes, const std::vector<Series>& series);

}  // namespace rarefit::svg
