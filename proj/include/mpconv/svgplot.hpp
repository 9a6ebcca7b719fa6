#ifndef MPCONV_SVGPLOT_HPP
#define MPCONV_SVGPLOT_HPP

#include <string>
#include <vector>

namespace mpconv::svgplot {

struct Series {
    std::string label;
    const std::vector<double>* y = nullptr;
};

/// Static line chart; long series are decimated with a min/max envelope so the
/// file stays small without hiding spikes.
struct LineChart {
    std::string title;
    std::string x_label = "t [s]";
    std::string y_label;
    int width = 960;
    int height = 320;
    int max_points_per_series = 2000;
};

std::string render(const LineChart& chart, const std::vector<double>& x,
                   const std::vector<Series>& series);

void write(const LineChart& chart, const std::vector<double>& x,
           const std::vector<Series>& series, const std::string& path);

}  // namespace mpconv::svgplot

#endif
