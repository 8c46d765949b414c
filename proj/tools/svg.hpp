#pragma once

#include <string>
#include <vector>

namespace icedist::svg {

struct Series {
    std::vector<double> x, y;
    std::string color = "#1f4e79";
    double width = 1.5;
    bool dashed = false;
};

struct Shade {
    std::vector<double> x, lo, hi;
    std::string color = "#999999";
    double opacity = 0.35;
};

/// One panel of a line chart with optional shaded bands.
struct Panel {
    std::string title;
    std::string x_label;
    std::string y_label;
    std::vector<Shade> shades;
    std::vector<Series> lines;
    std::vector<double> vlines;  // vertical reference lines
};

/// Panels laid out in a grid, `columns` per row. Output depends only on the
/// inputs, so identical data give identical files.
std::string render_panels(const std::vector<Panel>& panels, std::size_t columns = 1);

/// Heat map of values[i][j] at (x[j], y[i]) with a colour bar.
std::string render_heatmap(const std::vector<double>& x, const std::vector<double>& y,
                           const std::vector<std::vector<double>>& values, const std::string& title,
                           const std::string& x_label, const std::string& y_label);

}  // namespace icedist::svg
