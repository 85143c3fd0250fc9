#include "vqcpc/svg.hpp"

#include <algorithm>
#include <fstream>

#include "vqcpc/errors.hpp"

namespace vqcpc {

void write_bar_chart_svg(const std::filesystem::path& file, const std::string& title,
                         const std::vector<std::pair<std::string, double>>& bars) {
    std::ofstream out(file);
    if (!out) throw Error("cannot write figure " + file.string());

    const int width = 960, height = 360;
    const int margin_l = 50, margin_b = 60, margin_t = 30, margin_r = 10;
    const int plot_w = width - margin_l - margin_r;
    const int plot_h = height - margin_t - margin_b;

    double max_v = 1e-12;
    for (const auto& [_, v] : bars) max_v = std::max(max_v, v);

    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
        << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<text x=\"" << margin_l << "\" y=\"20\" font-family=\"sans-serif\" font-size=\"14\">"
        << title << "</text>\n";
    out << "<line x1=\"" << margin_l << "\" y1=\"" << margin_t + plot_h << "\" x2=\""
        << margin_l + plot_w << "\" y2=\"" << margin_t + plot_h << "\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << margin_l << "\" y1=\"" << margin_t << "\" x2=\"" << margin_l
        << "\" y2=\"" << margin_t + plot_h << "\" stroke=\"black\"/>\n";

    const size_t n = std::max<size_t>(1, bars.size());
    const double bw = static_cast<double>(plot_w) / static_cast<double>(n);
    const bool label_all = n <= 40;
    for (size_t i = 0; i < bars.size(); ++i) {
        const double h = bars[i].second / max_v * plot_h;
        const double x = margin_l + static_cast<double>(i) * bw;
        out << "<rect x=\"" << x + 0.1 * bw << "\" y=\"" << margin_t + plot_h - h << "\" width=\""
            << 0.8 * bw << "\" height=\"" << h << "\" fill=\"steelblue\"/>\n";
        if (label_all || i % std::max<size_t>(1, n / 40) == 0)
            out << "<text x=\"" << x + 0.5 * bw << "\" y=\"" << margin_t + plot_h + 14
                << "\" font-family=\"sans-serif\" font-size=\"9\" text-anchor=\"middle\" "
                   "transform=\"rotate(45 " << x + 0.5 * bw << ' ' << margin_t + plot_h + 14
                << ")\">" << bars[i].first << "</text>\n";
    }
    out << "<text x=\"12\" y=\"" << margin_t + 8 << "\" font-family=\"sans-serif\" font-size=\"10\">"
        << max_v << "</text>\n";
    out << "</svg>\n";
}

}  // namespace vqcpc
