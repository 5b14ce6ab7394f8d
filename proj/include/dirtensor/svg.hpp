#pragma once

// Static scatter plots written as plain SVG markup. Each plot also has a CSV
// sibling holding exactly the numbers drawn.

#include <optional>
#include <string>
#include <vector>

namespace dirtensor {

struct PlotSeries {
    std::string label;
    std::vector<double> x, y;
    /// Optional error bars; either empty or the same length as y.
    std::vector<double> y_lo, y_hi;
    bool connect = false;  // draw a polyline through the points
};

struct PlotLine {
    std::string label;
    double x0 = 0.0, y0 = 0.0, x1 = 0.0, y1 = 0.0;  // data coordinates
};

struct Plot {
    std::string title, x_label, y_label;
    bool log_x = false, log_y = false;
    std::vector<PlotSeries> series;
    std::vector<PlotLine> lines;
};

/// Line y = exp(intercept) x^slope between x0 and x1, as a segment in data space.
PlotLine power_law_line(std::string label, double slope, double intercept, double x0, double x1);

std::string render_svg(const Plot& plot);

/// Writes <stem>.svg and <stem>.csv (columns: series, kind, x, y, y_lo, y_hi).
void write_plot(const Plot& plot, const std::string& stem);
void write_plot(const Plot& plot, const std::string& svg_path, const std::string& csv_path);

}  // namespace dirtensor
