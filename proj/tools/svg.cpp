#include "svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace fieldforge::svg {
namespace {

constexpr double kW = 640, kH = 420, kLeft = 70, kRight = 20, kTop = 40, kBottom = 55;

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string header(const std::string& title, const std::string& x_label, const std::string& y_label) {
  std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(kW) + "\" height=\"" + num(kH) +
                  "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s += "<text x=\"" + num(kW / 2) + "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" + escape(title) + "</text>\n";
  s += "<text x=\"" + num(kLeft + (kW - kLeft - kRight) / 2) + "\" y=\"" + num(kH - 12) +
       "\" text-anchor=\"middle\">" + escape(x_label) + "</text>\n";
  s += "<text transform=\"translate(16," + num(kTop + (kH - kTop - kBottom) / 2) +
       ") rotate(-90)\" text-anchor=\"middle\">" + escape(y_label) + "</text>\n";
  return s;
}

const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd"};

}  // namespace

std::string line_plot(const std::vector<Series>& series, const std::string& title, const std::string& x_label,
                      const std::string& y_label) {
  double x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  bool first = true;
  for (const auto& s : series)
    for (auto [x, y] : s.points) {
      if (first) {
        x0 = x1 = x;
        y0 = y1 = y;
        first = false;
      }
      x0 = std::min(x0, x);
      x1 = std::max(x1, x);
      y0 = std::min(y0, y);
      y1 = std::max(y1, y);
    }
  if (x1 == x0) x1 = x0 + 1;
  if (y1 == y0) y1 = y0 + 1;
  const double pw = kW - kLeft - kRight, ph = kH - kTop - kBottom;
  auto px = [&](double x) { return kLeft + (x - x0) / (x1 - x0) * pw; };
  auto py = [&](double y) { return kTop + ph - (y - y0) / (y1 - y0) * ph; };

  std::string s = header(title, x_label, y_label);
  s += "<rect x=\"" + num(kLeft) + "\" y=\"" + num(kTop) + "\" width=\"" + num(pw) + "\" height=\"" + num(ph) +
       "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int t = 0; t <= 4; ++t) {
    const double xv = x0 + (x1 - x0) * t / 4, yv = y0 + (y1 - y0) * t / 4;
    s += "<text x=\"" + num(px(xv)) + "\" y=\"" + num(kTop + ph + 16) + "\" text-anchor=\"middle\">" + tick(xv) +
         "</text>\n";
    s += "<text x=\"" + num(kLeft - 6) + "\" y=\"" + num(py(yv) + 4) + "\" text-anchor=\"end\">" + tick(yv) +
         "</text>\n";
  }
  for (std::size_t i = 0; i < series.size(); ++i) {
    const char* color = kColors[i % 5];
    std::string pts;
    for (auto [x, y] : series[i].points) pts += num(px(x)) + "," + num(py(y)) + " ";
    s += "<polyline fill=\"none\" stroke=\"" + std::string(color) + "\" stroke-width=\"1.5\" points=\"" + pts +
         "\"/>\n";
    s += "<text x=\"" + num(kLeft + 10) + "\" y=\"" + num(kTop + 16 + 15 * static_cast<double>(i)) + "\" fill=\"" +
         color + "\">" + escape(series[i].label) + "</text>\n";
  }
  s += "</svg>\n";
  return s;
}

std::string heatmap(const std::vector<double>& values, int rows, int cols, const std::string& title,
                    const std::string& x_label, const std::string& y_label, double x_min, double x_max,
                    const std::vector<int>& marker_col) {
  double lo = 0, hi = 1;
  if (!values.empty()) {
    lo = *std::min_element(values.begin(), values.end());
    hi = *std::max_element(values.begin(), values.end());
  }
  if (hi == lo) hi = lo + 1;
  const double pw = kW - kLeft - kRight, ph = kH - kTop - kBottom;
  const double cw = pw / std::max(cols, 1), ch = ph / std::max(rows, 1);
  std::string s = header(title, x_label, y_label);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      const double t = (values[static_cast<std::size_t>(r) * cols + c] - lo) / (hi - lo);
      // dark = low fitness (good), light = high
      const int g = static_cast<int>(std::lround(30 + 225 * t));
      char color[16];
      std::snprintf(color, sizeof(color), "#%02x%02x%02x", g, g, std::min(255, g + 20));
      s += "<rect x=\"" + num(kLeft + c * cw) + "\" y=\"" + num(kTop + ph - (r + 1) * ch) + "\" width=\"" +
           num(cw + 0.05) + "\" height=\"" + num(ch + 0.05) + "\" fill=\"" + color + "\"/>\n";
    }
  for (int r = 0; r < rows && r < static_cast<int>(marker_col.size()); ++r) {
    const int c = marker_col[static_cast<std::size_t>(r)];
    if (c < 0) continue;
    s += "<circle cx=\"" + num(kLeft + (c + 0.5) * cw) + "\" cy=\"" + num(kTop + ph - (r + 0.5) * ch) +
         "\" r=\"2\" fill=\"#d62728\"/>\n";
  }
  s += "<rect x=\"" + num(kLeft) + "\" y=\"" + num(kTop) + "\" width=\"" + num(pw) + "\" height=\"" + num(ph) +
       "\" fill=\"none\" stroke=\"black\"/>\n";
  s += "<text x=\"" + num(kLeft) + "\" y=\"" + num(kTop + ph + 16) + "\" text-anchor=\"middle\">" + tick(x_min) +
       "</text>\n";
  s += "<text x=\"" + num(kLeft + pw) + "\" y=\"" + num(kTop + ph + 16) + "\" text-anchor=\"middle\">" + tick(x_max) +
       "</text>\n";
  s += "<text x=\"" + num(kLeft - 6) + "\" y=\"" + num(kTop + ph) + "\" text-anchor=\"end\">0</text>\n";
  s += "<text x=\"" + num(kLeft - 6) + "\" y=\"" + num(kTop + 10) + "\" text-anchor=\"end\">" + std::to_string(rows - 1) +
       "</text>\n";
  s += "</svg>\n";
  return s;
}

}  // namespace fieldforge::svg
