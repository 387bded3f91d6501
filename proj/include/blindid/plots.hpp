#pragma once

#include "blindid/experiments.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace blindid::plots {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

struct ChartSpec {
  std::string title;
  std::string x_label;
  std::string y_label;
  int width = 640;
  int height = 420;
};

/// Standalone SVG line chart. Non-finite points are skipped.
std::string render_line_chart(const std::vector<Series>& series, const ChartSpec& spec);

/// Writes <metric>_vs_q.svg (one line per noise level) and
/// <metric>_vs_noise.svg (one line per q) for the headline metrics, skipping
/// an axis with a single grid value. Returns the files written.
std::vector<std::filesystem::path> write_sweep_plots(const std::filesystem::path& dir,
                                                     const std::vector<SweepCell>& cells);

}  // namespace blindid::plots
