#include "varcap/svg.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace varcap {

namespace {

constexpr double kW = 960, kH = 540;
constexpr double kL = 80, kR = 24, kT = 24, kB = 48;

const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b"};

double nice_step(double span) {
    const double raw = span / 6.0;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    for (double m : {1.0, 2.0, 5.0, 10.0})
        if (raw <= m * mag) return m * mag;
    return 10.0 * mag;
}

}  // namespace

std::string render_fr_svg(const std::vector<FrCsvRow>& rows, const std::vector<double>& base_kvar) {
    // Group rows per probability level, in first-appearance order.
    std::vector<double> levels;
    for (const FrCsvRow& r : rows)
        if (std::find(levels.begin(), levels.end(), r.probability) == levels.end())
            levels.push_back(r.probability);

    double ymin = 0.0, ymax = 0.0;
    bool seen = false;
    for (const FrCsvRow& r : rows) {
        if (r.status != "optimal") continue;
        if (!seen) {
            ymin = r.q_sub_min_kvar;
            ymax = r.q_sub_max_kvar;
            seen = true;
        }
        ymin = std::min(ymin, r.q_sub_min_kvar);
        ymax = std::max(ymax, r.q_sub_max_kvar);
    }
    for (double b : base_kvar) {
        ymin = std::min(ymin, b);
        ymax = std::max(ymax, b);
    }
    if (!seen && base_kvar.empty()) {
        ymin = -1;
        ymax = 1;
    }
    const double pad = 0.06 * std::max(1e-9, ymax - ymin);
    ymin -= pad;
    ymax += pad;

    auto xs = [&](double h) { return kL + (kW - kL - kR) * h / 23.0; };
    auto ys = [&](double q) { return kT + (kH - kT - kB) * (ymax - q) / (ymax - ymin); };

    std::ostringstream s;
    s << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 " << kW << " " << kH
      << "\" font-family=\"sans-serif\" font-size=\"13\">\n";
    s << "<rect x=\"0\" y=\"0\" width=\"" << kW << "\" height=\"" << kH << "\" fill=\"white\"/>\n";

    // Axes and grid
    const double step = nice_step(ymax - ymin);
    const double y0 = std::ceil(ymin / step) * step;
    for (double q = y0; q <= ymax + 1e-9; q += step) {
        s << "<line x1=\"" << kL << "\" y1=\"" << format_sig6(ys(q)) << "\" x2=\"" << kW - kR
          << "\" y2=\"" << format_sig6(ys(q)) << "\" stroke=\"#dddddd\"/>\n";
        s << "<text x=\"" << kL - 8 << "\" y=\"" << format_sig6(ys(q) + 4)
          << "\" text-anchor=\"end\">" << format_sig6(q) << "</text>\n";
    }
    for (int h = 0; h < 24; h += 2) {
        s << "<text x=\"" << format_sig6(xs(h)) << "\" y=\"" << kH - kB + 20
          << "\" text-anchor=\"middle\">" << h << "</text>\n";
    }
    s << "<text x=\"" << (kL + kW - kR) / 2 << "\" y=\"" << kH - 8
      << "\" text-anchor=\"middle\">hour</text>\n";
    s << "<text x=\"16\" y=\"" << (kT + kH - kB) / 2
      << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " << (kT + kH - kB) / 2
      << ")\">substation VAR (kvar)</text>\n";

    // Bands, widest (lowest probability) first so nested regions stay visible.
    for (std::size_t li = 0; li < levels.size(); ++li) {
        const double p = levels[li];
        std::vector<const FrCsvRow*> level_rows;
        for (const FrCsvRow& r : rows)
            if (r.probability == p && r.status == "optimal") level_rows.push_back(&r);
        if (level_rows.empty()) continue;
        const char* color = kPalette[li % 6];
        // Split into contiguous hour runs so infeasible hours leave gaps.
        std::size_t i = 0;
        while (i < level_rows.size()) {
            std::size_t jx = i;
            while (jx + 1 < level_rows.size() &&
                   level_rows[jx + 1]->hour == level_rows[jx]->hour + 1)
                ++jx;
            s << "<polygon fill=\"" << color << "\" fill-opacity=\"0.18\" stroke=\"" << color
              << "\" stroke-width=\"1.5\" points=\"";
            for (std::size_t k = i; k <= jx; ++k)
                s << format_sig6(xs(level_rows[k]->hour)) << ","
                  << format_sig6(ys(level_rows[k]->q_sub_max_kvar)) << " ";
            for (std::size_t k = jx + 1; k-- > i;)
                s << format_sig6(xs(level_rows[k]->hour)) << ","
                  << format_sig6(ys(level_rows[k]->q_sub_min_kvar))
                  << (k == i ? "" : " ");
            s << "\"/>\n";
            i = jx + 1;
        }
        s << "<text x=\"" << kW - kR - 8 << "\" y=\"" << kT + 18 + 18 * li
          << "\" text-anchor=\"end\" fill=\"" << color << "\">P = " << format_sig6(p)
          << "</text>\n";
    }

    if (!base_kvar.empty()) {
        s << "<polyline fill=\"none\" stroke=\"#333333\" stroke-width=\"1.5\" "
             "stroke-dasharray=\"6 4\" points=\"";
        for (std::size_t h = 0; h < base_kvar.size(); ++h)
            s << format_sig6(xs(static_cast<double>(h))) << "," << format_sig6(ys(base_kvar[h]))
              << (h + 1 == base_kvar.size() ? "" : " ");
        s << "\"/>\n";
        s << "<text x=\"" << kW - kR - 8 << "\" y=\"" << kT + 18 + 18 * levels.size()
          << "\" text-anchor=\"end\" fill=\"#333333\">base load</text>\n";
    }

    s << "</svg>\n";
    return s.str();
}

void write_fr_svg(const std::filesystem::path& path, const std::vector<FrCsvRow>& rows,
                  const std::vector<double>& base_kvar) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw value_error("cannot write " + path.string());
    out << render_fr_svg(rows, base_kvar);
}

}  // namespace varcap
