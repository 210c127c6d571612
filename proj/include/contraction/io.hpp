#pragma once

#include <fstream>
#include <string>
#include <vector>

namespace contraction {

// %.9g formatting used for every CSV and text report.
std::string fmt_num(double v);

// Opens `path` for writing or throws IoError.
std::ofstream open_output(const std::string& path);

struct PlotSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  bool markers = false;  // points instead of a polyline
  std::string color = "#1f77b4";
};

// Minimal static line/scatter plot.
void write_svg_plot(const std::string& path, const std::string& title, const std::string& x_label,
                    const std::string& y_label, const std::vector<PlotSeries>& series);

}  // namespace contraction
