#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "napts/metrics.hpp"

namespace napts {

struct MethodSeries {
  std::string label;
  std::vector<RunRecord> records;
};

/// Two-panel SVG figure. Left: per-epoch mean batch loss (solid, left axis)
/// and end-of-epoch validation accuracy (dashed, right axis). Right:
/// cumulative rejected steps against the outer iteration index. One legend
/// entry per series.
std::string render_plot_svg(std::span<const MethodSeries> series);
void write_plot_svg(std::span<const MethodSeries> series, const std::filesystem::path& path);

}  // namespace napts
