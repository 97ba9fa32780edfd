#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "arena/orchestrator/events.hpp"
#include "arena/schemes/population.hpp"

namespace arena::cli {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  bool points = false;  // markers instead of a polyline
};

struct Figure {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<Series> series;
  /// Equal x/y scale, used for spatial traces.
  bool square = false;
  /// Optional fixed bounds; computed from the data when lo >= hi.
  double x_lo = 0.0, x_hi = 0.0, y_lo = 0.0, y_hi = 0.0;
};

/// Standalone SVG document for a figure.
std::string render_svg(const Figure& figure);
void write_svg(const std::filesystem::path& path, const Figure& figure);

/// Episode score against environment steps, one smoothed curve per policy.
Figure score_figure(const std::vector<orch::MetricsRow>& rows, std::size_t window = 20);

/// Coop-nav agent paths and targets of one episode, from eval trace and targets files.
Figure trace_figure(const std::filesystem::path& trace, const std::filesystem::path& targets, int episode);

/// Per-generation member scores with the selected lineage highlighted.
Figure lineage_figure(const std::vector<schemes::LineageEntry>& lineage);

}  // namespace arena::cli
