#include "mpconv/svgplot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "mpconv/errors.hpp"

namespace mpconv::svgplot {

namespace {

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                          "#9467bd", "#8c564b", "#17becf"};

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

/// Round a span to a pleasant tick step (1/2/5 decades).
double tick_step(double span) {
    if (span <= 0.0) return 1.0;
    const double raw = span / 6.0;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    const double n = raw / mag;
    if (n < 1.5) return mag;
    if (n < 3.5) return 2.0 * mag;
    if (n < 7.5) return 5.0 * mag;
    return 10.0 * mag;
}

}  // namespace

std::string render(const LineChart& chart, const std::vector<double>& x,
                   const std::vector<Series>& series) {
    const int ml = 70, mr = 20, mt = 34, mb = 46;
    const double pw = chart.width - ml - mr;
    const double ph = chart.height - mt - mb;

    double x0 = std::numeric_limits<double>::max(), x1 = -x0;
    double y0 = std::numeric_limits<double>::max(), y1 = -y0;
    for (double v : x) {
        x0 = std::min(x0, v);
        x1 = std::max(x1, v);
    }
    for (const auto& s : series) {
        if (!s.y || s.y->size() != x.size()) {
            throw ValidationError("plot series '" + s.label + "' length mismatch");
        }
        for (double v : *s.y) {
            y0 = std::min(y0, v);
            y1 = std::max(y1, v);
        }
    }
    if (x.empty()) x0 = 0, x1 = 1;
    if (y1 <= y0) {
        y0 -= 1.0;
        y1 += 1.0;
    }
    const double pad = 0.05 * (y1 - y0);
    y0 -= pad;
    y1 += pad;

    const auto sx = [&](double v) { return ml + (v - x0) / (x1 - x0) * pw; };
    const auto sy = [&](double v) { return mt + (y1 - v) / (y1 - y0) * ph; };

    std::string svg;
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(chart.width) +
           "\" height=\"" + std::to_string(chart.height) + "\" viewBox=\"0 0 " +
           std::to_string(chart.width) + " " + std::to_string(chart.height) + "\">\n";
    svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg += "<text x=\"" + num(chart.width / 2.0) + "\" y=\"18\" text-anchor=\"middle\" "
           "font-family=\"sans-serif\" font-size=\"14\">" + chart.title + "</text>\n";

    // axes and grid
    const double xs = tick_step(x1 - x0);
    const double ys = tick_step(y1 - y0);
    svg += "<g font-family=\"sans-serif\" font-size=\"11\" fill=\"#444\">\n";
    for (double v = std::ceil(x0 / xs) * xs; v <= x1 + 1e-12 * xs; v += xs) {
        svg += "<line x1=\"" + num(sx(v)) + "\" y1=\"" + num(mt) + "\" x2=\"" + num(sx(v)) +
               "\" y2=\"" + num(mt + ph) + "\" stroke=\"#ddd\"/>\n";
        svg += "<text x=\"" + num(sx(v)) + "\" y=\"" + num(mt + ph + 16) +
               "\" text-anchor=\"middle\">" + num(v) + "</text>\n";
    }
    for (double v = std::ceil(y0 / ys) * ys; v <= y1 + 1e-12 * ys; v += ys) {
        svg += "<line x1=\"" + num(ml) + "\" y1=\"" + num(sy(v)) + "\" x2=\"" + num(ml + pw) +
               "\" y2=\"" + num(sy(v)) + "\" stroke=\"#ddd\"/>\n";
        svg += "<text x=\"" + num(ml - 6) + "\" y=\"" + num(sy(v) + 4) +
               "\" text-anchor=\"end\">" + num(v) + "</text>\n";
    }
    svg += "</g>\n";
    svg += "<rect x=\"" + num(ml) + "\" y=\"" + num(mt) + "\" width=\"" + num(pw) +
           "\" height=\"" + num(ph) + "\" fill=\"none\" stroke=\"#888\"/>\n";
    svg += "<text x=\"" + num(ml + pw / 2) + "\" y=\"" + num(chart.height - 8) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" +
           chart.x_label + "</text>\n";
    svg += "<text x=\"16\" y=\"" + num(mt + ph / 2) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" "
           "transform=\"rotate(-90 16 " + num(mt + ph / 2) + ")\">" + chart.y_label +
           "</text>\n";

    // series with min/max envelope decimation
    for (std::size_t si = 0; si < series.size(); ++si) {
        const auto& ys_data = *series[si].y;
        const char* color = kPalette[si % std::size(kPalette)];
        std::string pts;
        const std::size_t n = x.size();
        const std::size_t bins = std::size_t(std::max(chart.max_points_per_series / 2, 1));
        if (n <= 2 * bins) {
            for (std::size_t i = 0; i < n; ++i) {
                pts += num(sx(x[i])) + "," + num(sy(ys_data[i])) + " ";
            }
        } else {
            for (std::size_t b = 0; b < bins; ++b) {
                const std::size_t lo = b * n / bins;
                const std::size_t hi = std::max(lo + 1, (b + 1) * n / bins);
                double vmin = ys_data[lo], vmax = ys_data[lo];
                for (std::size_t i = lo; i < hi && i < n; ++i) {
                    vmin = std::min(vmin, ys_data[i]);
                    vmax = std::max(vmax, ys_data[i]);
                }
                const double xm = x[std::min((lo + hi) / 2, n - 1)];
                pts += num(sx(xm)) + "," + num(sy(vmin)) + " ";
                if (vmax != vmin) pts += num(sx(xm)) + "," + num(sy(vmax)) + " ";
            }
        }
        svg += "<polyline fill=\"none\" stroke=\"";
        svg += color;
        svg += "\" stroke-width=\"1.2\" points=\"" + pts + "\"/>\n";
        // legend
        const double lx = ml + 10 + 150.0 * double(si);
        svg += "<line x1=\"" + num(lx) + "\" y1=\"" + num(mt + 10) + "\" x2=\"" + num(lx + 18) +
               "\" y2=\"" + num(mt + 10) + "\" stroke=\"";
        svg += color;
        svg += "\" stroke-width=\"2\"/>\n";
        svg += "<text x=\"" + num(lx + 22) + "\" y=\"" + num(mt + 14) +
               "\" font-family=\"sans-serif\" font-size=\"11\">" + series[si].label +
               "</text>\n";
    }
    svg += "</svg>\n";
    return svg;
}

void write(const LineChart& chart, const std::vector<double>& x,
           const std::vector<Series>& series, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ValidationError("cannot open '" + path + "' for writing");
    f << render(chart, x, series);
}

}  // namespace mpconv::svgplot
