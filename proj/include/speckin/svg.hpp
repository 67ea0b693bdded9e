// Self-contained SVG 1.1 emission: line plots with optional log axes, plus a
// histogram-with-overlays variant for spectrum figures. No external plotting
// dependency; figures are batch outputs.
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include "speckin/csv.hpp"

namespace speckin {

struct PlotSeries {
    std::string name;
    std::vector<double> xs;
    std::vector<double> ys;
    std::string color = "#1f77b4";
};

struct PlotSpec {
    std::string title;
    std::string x_label;
    std::string y_label;
    bool log_x = false;
    bool log_y = false;
    int width = 760;
    int height = 480;
    std::vector<PlotSeries> series;
    // Histogram bars drawn behind the series (bin edges n+1, counts n).
    std::vector<double> bar_edges;
    std::vector<double> bar_heights;
    std::vector<double> x_markers;  // dashed vertical lines
};

namespace detail {

struct AxisRange {
    double lo = 0.0, hi = 1.0;
};

inline AxisRange nice_range(double lo, double hi, bool log_scale) {
    if (!(hi > lo)) {
        hi = lo + 1.0;
        lo -= 1.0;
    }
    if (log_scale) return {lo, hi};  // already in log10 space
    const double pad = 0.05 * (hi - lo);
    return {lo - pad, hi + pad};
}

inline std::string svg_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '&') out += "&amp;";
        else if (c == '<') out += "&lt;";
        else if (c == '>') out += "&gt;";
        else out.push_back(c);
    }
    return out;
}

} // namespace detail

inline void write_svg_plot(std::ostream& os, const PlotSpec& plot) {
    const double ml = 64, mr = 18, mt = 34, mb = 46;
    const double pw = plot.width - ml - mr, ph = plot.height - mt - mb;

    auto tx = [&](double v, bool log_scale) {
        return log_scale ? std::log10(std::max(v, 1e-300)) : v;
    };

    double x_lo = std::numeric_limits<double>::infinity(), x_hi = -x_lo;
    double y_lo = x_lo, y_hi = -x_lo;
    auto fold = [&](double x, double y) {
        if (plot.log_x && !(x > 0.0)) return;
        if (plot.log_y && !(y > 0.0)) return;
        if (!std::isfinite(x) || !std::isfinite(y)) return;
        x_lo = std::min(x_lo, tx(x, plot.log_x));
        x_hi = std::max(x_hi, tx(x, plot.log_x));
        y_lo = std::min(y_lo, tx(y, plot.log_y));
        y_hi = std::max(y_hi, tx(y, plot.log_y));
    };
    for (const auto& s : plot.series)
        for (std::size_t i = 0; i < s.xs.size(); ++i) fold(s.xs[i], s.ys[i]);
    for (std::size_t i = 0; i + 1 < plot.bar_edges.size(); ++i) {
        fold(plot.bar_edges[i], plot.bar_heights[i]);
        fold(plot.bar_edges[i + 1], 0.0);
    }
    for (double m : plot.x_markers) fold(m, (y_lo < y_hi) ? y_lo : 1.0);
    if (!std::isfinite(x_lo)) {
        x_lo = 0;
        x_hi = 1;
        y_lo = 0;
        y_hi = 1;
    }
    const auto xr = detail::nice_range(x_lo, x_hi, plot.log_x);
    const auto yr = detail::nice_range(y_lo, y_hi, plot.log_y);

    auto px = [&](double v) {
        return ml + pw * (tx(v, plot.log_x) - xr.lo) / (xr.hi - xr.lo);
    };
    auto py = [&](double v) {
        return mt + ph * (1.0 - (tx(v, plot.log_y) - yr.lo) / (yr.hi - yr.lo));
    };

    os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
       << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\""
       << plot.width << "\" height=\"" << plot.height << "\">\n"
       << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

    // Bars behind everything else.
    for (std::size_t i = 0; i + 1 < plot.bar_edges.size() && i < plot.bar_heights.size(); ++i) {
        if (plot.log_y && !(plot.bar_heights[i] > 0.0)) continue;
        const double x0 = px(plot.bar_edges[i]), x1 = px(plot.bar_edges[i + 1]);
        const double y1 = py(plot.bar_heights[i]);
        const double y0 = mt + ph;
        os << "<rect x=\"" << x0 << "\" y=\"" << y1 << "\" width=\"" << (x1 - x0)
           << "\" height=\"" << (y0 - y1) << "\" fill=\"#c6dbef\" stroke=\"#9ecae1\"/>\n";
    }

    // Axes + 5 ticks per side.
    os << "<line x1=\"" << ml << "\" y1=\"" << mt + ph << "\" x2=\"" << ml + pw
       << "\" y2=\"" << mt + ph << "\" stroke=\"black\"/>\n"
       << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\""
       << mt + ph << "\" stroke=\"black\"/>\n";
    for (int k = 0; k <= 4; ++k) {
        const double fx = xr.lo + (xr.hi - xr.lo) * k / 4.0;
        const double fy = yr.lo + (yr.hi - yr.lo) * k / 4.0;
        const double xa = ml + pw * k / 4.0;
        const double ya = mt + ph * (1.0 - k / 4.0);
        const double x_val = plot.log_x ? std::pow(10.0, fx) : fx;
        const double y_val = plot.log_y ? std::pow(10.0, fy) : fy;
        char xb[32], yb[32];
        std::snprintf(xb, sizeof(xb), "%.3g", x_val);
        std::snprintf(yb, sizeof(yb), "%.3g", y_val);
        os << "<line x1=\"" << xa << "\" y1=\"" << mt + ph << "\" x2=\"" << xa
           << "\" y2=\"" << mt + ph + 4 << "\" stroke=\"black\"/>\n"
           << "<text x=\"" << xa << "\" y=\"" << mt + ph + 18
           << "\" font-size=\"11\" text-anchor=\"middle\">" << xb << "</text>\n"
           << "<line x1=\"" << ml - 4 << "\" y1=\"" << ya << "\" x2=\"" << ml
           << "\" y2=\"" << ya << "\" stroke=\"black\"/>\n"
           << "<text x=\"" << ml - 7 << "\" y=\"" << ya + 4
           << "\" font-size=\"11\" text-anchor=\"end\">" << yb << "</text>\n";
    }

    for (double m : plot.x_markers) {
        if (plot.log_x && !(m > 0.0)) continue;
        os << "<line x1=\"" << px(m) << "\" y1=\"" << mt << "\" x2=\"" << px(m)
           << "\" y2=\"" << mt + ph
           << "\" stroke=\"#d62728\" stroke-dasharray=\"5,4\"/>\n";
    }

    int legend_row = 0;
    for (const auto& s : plot.series) {
        std::string points;
        bool pen_down = false;
        for (std::size_t i = 0; i < s.xs.size(); ++i) {
            const double x = s.xs[i], y = s.ys[i];
            if ((plot.log_x && !(x > 0.0)) || (plot.log_y && !(y > 0.0)) ||
                !std::isfinite(x) || !std::isfinite(y)) {
                pen_down = false;
                continue;
            }
            if (!pen_down && !points.empty()) {
                os << "<polyline fill=\"none\" stroke=\"" << s.color
                   << "\" stroke-width=\"1.5\" points=\"" << points << "\"/>\n";
                points.clear();
            }
            char buf[64];
            std::snprintf(buf, sizeof(buf), "%.2f,%.2f ", px(x), py(y));
            points += buf;
            pen_down = true;
        }
        if (!points.empty())
            os << "<polyline fill=\"none\" stroke=\"" << s.color
               << "\" stroke-width=\"1.5\" points=\"" << points << "\"/>\n";
        os << "<rect x=\"" << ml + pw - 150 << "\" y=\"" << mt + 6 + 16 * legend_row
           << "\" width=\"12\" height=\"3\" fill=\"" << s.color << "\"/>\n"
           << "<text x=\"" << ml + pw - 132 << "\" y=\"" << mt + 11 + 16 * legend_row
           << "\" font-size=\"11\">" << detail::svg_escape(s.name) << "</text>\n";
        ++legend_row;
    }

    os << "<text x=\"" << ml + pw / 2 << "\" y=\"" << mt - 12
       << "\" font-size=\"14\" text-anchor=\"middle\">" << detail::svg_escape(plot.title)
       << "</text>\n"
       << "<text x=\"" << ml + pw / 2 << "\" y=\"" << plot.height - 10
       << "\" font-size=\"12\" text-anchor=\"middle\">" << detail::svg_escape(plot.x_label)
       << "</text>\n"
       << "<text x=\"14\" y=\"" << mt + ph / 2
       << "\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 14 "
       << mt + ph / 2 << ")\">" << detail::svg_escape(plot.y_label) << "</text>\n"
       << "</svg>\n";
}

} // namespace speckin
