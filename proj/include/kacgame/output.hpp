#pragma once

// Persistence: snapshot files, CSV tables, rendered images and the run
// manifest with content hashes.

#include "kacgame/density.hpp"

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace kacgame {

/// Header lines `# time`, `# dims`, `# strategies`, then one row per node in
/// row-major order holding the strategy densities.
void write_snapshot(const std::filesystem::path& path, double time, const DensityField& f);

struct Snapshot {
    double time = 0.0;
    std::vector<int> dims;
    int strategies = 0;
    /// values[node * strategies + i]
    std::vector<double> values;
};
Snapshot read_snapshot(const std::filesystem::path& path);

void write_text(const std::filesystem::path& path, const std::string& content);

/// Hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

/// Binary PPM heatmap of a 2-D field in [lo, hi] (viridis-like ramp).
void write_heatmap_ppm(const std::filesystem::path& path, const std::vector<double>& values, int rows, int cols,
                       double lo = 0.0, double hi = 1.0);

struct Series {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
};

/// Line plot with axes, ticks and a legend.
void write_line_plot_svg(const std::filesystem::path& path, const std::string& title, const std::string& xlabel,
                         const std::string& ylabel, const std::vector<Series>& series);

/// Fixed-precision number formatting shared by every CSV writer, so replays
/// are byte-identical.
std::string fmt_num(double v);

} // namespace kacgame
