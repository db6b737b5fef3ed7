#pragma once

#include <string>
#include <vector>

namespace backtime::svg {

struct Series {
    std::string label;
    std::vector<double> y;
    std::vector<double> x;  // optional; defaults to 0..n-1
};

/// Self-contained SVG line chart, one polyline per series, with axes, ticks,
/// and a legend. No external assets.
void line_chart(const std::string& path, const std::string& title,
                const std::vector<Series>& series, const std::string& x_label = "",
                const std::string& y_label = "");

/// Vertical bar chart with a zero baseline; negative bars hang downward.
void bar_chart(const std::string& path, const std::string& title,
               const std::vector<std::string>& labels, const std::vector<double>& values,
               const std::string& y_label = "");

}  // namespace backtime::svg
