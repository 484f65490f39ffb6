#pragma once

#include <string>
#include <utility>
#include <vector>

namespace fieldforge::svg {

struct Series {
  std::string label;
  std::vector<std::pair<double, double>> points;
};

std::string line_plot(const std::vector<Series>& series, const std::string& title, const std::string& x_label,
                      const std::string& y_label);

// values is row-major rows x cols; rows drawn bottom to top. Optional marker
// column per row (negative = none) is drawn as a dot.
std::string heatmap(const std::vector<double>& values, int rows, int cols, const std::string& title,
                    const std::string& x_label, const std::string& y_label, double x_min, double x_max,
                    const std::vector<int>& marker_col = {});

}  // namespace fieldforge::svg
