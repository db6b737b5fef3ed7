#include "backtime/svgplot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "backtime/error.hpp"

namespace backtime::svg {

namespace {

constexpr int kWidth = 640;
constexpr int kHeight = 400;
constexpr int kLeft = 64;
constexpr int kRight = 24;
constexpr int kTop = 40;
constexpr int kBottom = 48;

const char* kPalette[] = {"#1f6fb2", "#d1495b", "#3a7d44", "#8d6a9f", "#c77b29", "#4a4e69"};
constexpr int kPaletteSize = 6;

std::string fmt(double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '&') out += "&amp;";
        else if (c == '<') out += "&lt;";
        else if (c == '>') out += "&gt;";
        else out += c;
    }
    return out;
}

struct Axis {
    double lo = 0.0;
    double hi = 1.0;
    double scale(double v, double px0, double px1) const {
        return px0 + (v - lo) / (hi - lo) * (px1 - px0);
    }
};

Axis fit_axis(double lo, double hi) {
    if (!std::isfinite(lo) || !std::isfinite(hi)) {
        throw Error(ErrorKind::degenerate, "svg: non-finite plot data");
    }
    if (hi - lo < 1e-12) {
        lo -= 0.5;
        hi += 0.5;
    }
    const double pad = (hi - lo) * 0.05;
    return Axis{lo - pad, hi + pad};
}

void open_svg(std::ofstream& f, const std::string& path, const std::string& title) {
    f.open(path);
    if (!f) throw Error(ErrorKind::parse, "svg: cannot write " + path);
    f << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
      << kHeight << "\" viewBox=\"0 0 " << kWidth << " " << kHeight << "\">\n";
    f << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    f << "<text x=\"" << kWidth / 2 << "\" y=\"22\" font-family=\"monospace\" font-size=\"14\""
      << " text-anchor=\"middle\">" << escape(title) << "</text>\n";
}

void draw_frame(std::ofstream& f, const Axis& ya, const std::string& x_label,
                const std::string& y_label) {
    const int x0 = kLeft, x1 = kWidth - kRight;
    const int y0 = kHeight - kBottom, y1 = kTop;
    f << "<line x1=\"" << x0 << "\" y1=\"" << y0 << "\" x2=\"" << x1 << "\" y2=\"" << y0
      << "\" stroke=\"black\"/>\n";
    f << "<line x1=\"" << x0 << "\" y1=\"" << y0 << "\" x2=\"" << x0 << "\" y2=\"" << y1
      << "\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 4; ++i) {
        const double v = ya.lo + (ya.hi - ya.lo) * i / 4.0;
        const double py = ya.scale(v, y0, y1);
        f << "<line x1=\"" << x0 - 4 << "\" y1=\"" << fmt(py) << "\" x2=\"" << x0 << "\" y2=\""
          << fmt(py) << "\" stroke=\"black\"/>\n";
        f << "<text x=\"" << x0 - 8 << "\" y=\"" << fmt(py + 4)
          << "\" font-family=\"monospace\" font-size=\"11\" text-anchor=\"end\">" << fmt(v)
          << "</text>\n";
    }
    if (!x_label.empty()) {
        f << "<text x=\"" << (x0 + x1) / 2 << "\" y=\"" << kHeight - 10
          << "\" font-family=\"monospace\" font-size=\"12\" text-anchor=\"middle\">"
          << escape(x_label) << "</text>\n";
    }
    if (!y_label.empty()) {
        f << "<text x=\"14\" y=\"" << (y0 + y1) / 2
          << "\" font-family=\"monospace\" font-size=\"12\" text-anchor=\"middle\""
          << " transform=\"rotate(-90 14 " << (y0 + y1) / 2 << ")\">" << escape(y_label)
          << "</text>\n";
    }
}

}  // namespace

void line_chart(const std::string& path, const std::string& title,
                const std::vector<Series>& series, const std::string& x_label,
                const std::string& y_label) {
    if (series.empty()) throw Error(ErrorKind::degenerate, "svg: no series to plot");
    double ylo = std::numeric_limits<double>::infinity();
    double yhi = -ylo, xlo = ylo, xhi = -ylo;
    for (const Series& s : series) {
        if (s.y.empty()) throw Error(ErrorKind::degenerate, "svg: empty series " + s.label);
        if (!s.x.empty() && s.x.size() != s.y.size()) {
            throw Error(ErrorKind::shape, "svg: x/y length mismatch in " + s.label);
        }
        for (size_t i = 0; i < s.y.size(); ++i) {
            const double x = s.x.empty() ? static_cast<double>(i) : s.x[i];
            ylo = std::min(ylo, s.y[i]);
            yhi = std::max(yhi, s.y[i]);
            xlo = std::min(xlo, x);
            xhi = std::max(xhi, x);
        }
    }
    const Axis xa = fit_axis(xlo, xhi);
    const Axis ya = fit_axis(ylo, yhi);

    std::ofstream f;
    open_svg(f, path, title);
    draw_frame(f, ya, x_label, y_label);
    const int x0 = kLeft, x1 = kWidth - kRight;
    const int y0 = kHeight - kBottom, y1 = kTop;
    for (size_t si = 0; si < series.size(); ++si) {
        const Series& s = series[si];
        const char* color = kPalette[si % kPaletteSize];
        f << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        for (size_t i = 0; i < s.y.size(); ++i) {
            const double x = s.x.empty() ? static_cast<double>(i) : s.x[i];
            f << fmt(xa.scale(x, x0, x1)) << "," << fmt(ya.scale(s.y[i], y0, y1)) << " ";
        }
        f << "\"/>\n";
        const int ly = kTop + 14 * static_cast<int>(si);
        f << "<line x1=\"" << x1 - 110 << "\" y1=\"" << ly << "\" x2=\"" << x1 - 92 << "\" y2=\""
          << ly << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
        f << "<text x=\"" << x1 - 88 << "\" y=\"" << ly + 4
          << "\" font-family=\"monospace\" font-size=\"11\">" << escape(s.label) << "</text>\n";
    }
    f << "</svg>\n";
}

void bar_chart(const std::string& path, const std::string& title,
               const std::vector<std::string>& labels, const std::vector<double>& values,
               const std::string& y_label) {
    if (values.empty()) throw Error(ErrorKind::degenerate, "svg: no bars to plot");
    if (labels.size() != values.size()) {
        throw Error(ErrorKind::shape, "svg: label/value count mismatch");
    }
    double lo = 0.0, hi = 0.0;
    for (double v : values) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    const Axis ya = fit_axis(lo, hi);

    std::ofstream f;
    open_svg(f, path, title);
    draw_frame(f, ya, "", y_label);
    const int x0 = kLeft, x1 = kWidth - kRight;
    const int y0 = kHeight - kBottom, y1 = kTop;
    const double slot = static_cast<double>(x1 - x0) / static_cast<double>(values.size());
    const double bar = slot * 0.7;
    const double base = ya.scale(0.0, y0, y1);
    for (size_t i = 0; i < values.size(); ++i) {
        const double cx = x0 + slot * (static_cast<double>(i) + 0.5);
        const double py = ya.scale(values[i], y0, y1);
        const double top = std::min(py, base);
        const double h = std::fabs(py - base);
        f << "<rect x=\"" << fmt(cx - bar / 2) << "\" y=\"" << fmt(top) << "\" width=\""
          << fmt(bar) << "\" height=\"" << fmt(h) << "\" fill=\""
          << kPalette[i % kPaletteSize] << "\"/>\n";
        f << "<text x=\"" << fmt(cx) << "\" y=\"" << y0 + 16
          << "\" font-family=\"monospace\" font-size=\"10\" text-anchor=\"middle\">"
          << escape(labels[i]) << "</text>\n";
    }
    f << "</svg>\n";
}

}  // namespace backtime::svg
