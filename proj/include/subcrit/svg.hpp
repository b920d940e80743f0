#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace subcrit::svg {

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

struct LinePlot {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<Series> series;
  /// Horizontal dashed reference lines (e.g. true parameter values).
  std::vector<std::pair<std::string, double>> references;
};

/// Static line chart; NaN points break the line.
std::string render(const LinePlot& plot);

struct Heatmap {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<double> x;  ///< column coordinates
  std::vector<double> y;  ///< row coordinates
  std::vector<std::vector<double>> values;  ///< values[row][col]; NaN is drawn grey
};

std::string render(const Heatmap& map);

void write(const std::filesystem::path& path, const std::string& svg_text);

}  // namespace subcrit::svg
