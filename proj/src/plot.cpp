#include "kge/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>

namespace kge {

namespace {

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                          "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};
constexpr int kPaletteSize = 8;

constexpr double kWidth = 720.0, kHeight = 480.0;
constexpr double kLeft = 64.0, kRight = 600.0, kTop = 48.0, kBottom = 420.0;

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

struct Series {
    std::string model;
    std::vector<double> ratio, mean, sd;
};

}  // namespace

std::string render_plot_svg(const std::string& dataset, const std::string& surface,
                            const std::vector<AggregateRow>& agg, const PlotOptions& opts) {
    std::map<std::string, Series> by_model;
    std::set<double> ratios;
    double top = 0.0;
    for (const auto& a : agg) {
        if (a.dataset != dataset || a.surface != surface || a.split != opts.split ||
            a.mode != opts.mode) {
            continue;
        }
        Series& s = by_model[a.model];
        s.model = a.model;
        s.ratio.push_back(a.ratio);
        s.mean.push_back(a.mrr_mean);
        s.sd.push_back(a.mrr_std);
        ratios.insert(a.ratio);
        top = std::max(top, a.mrr_mean + a.mrr_std);
    }
    if (by_model.empty()) return "";

    const double ymax = std::max(0.1, std::ceil(top * 10.0 - 1e-9) / 10.0);
    double min_pos = 0.0, max_pos = 0.0;
    bool has_zero = false;
    for (double r : ratios) {
        if (r == 0.0) {
            has_zero = true;
        } else {
            if (min_pos == 0.0) min_pos = r;
            max_pos = r;
        }
    }

    // ratio 0 sits at the left edge; positive ratios occupy a log-scaled band
    const double band_left = has_zero && min_pos > 0.0 ? kLeft + 0.12 * (kRight - kLeft) : kLeft;
    auto xpos = [&](double r) {
        if (r == 0.0) return kLeft;
        if (min_pos == max_pos) return (band_left + kRight) / 2.0;
        const double t = (std::log10(r) - std::log10(min_pos)) /
                         (std::log10(max_pos) - std::log10(min_pos));
        return band_left + t * (kRight - band_left);
    };
    auto ypos = [&](double v) { return kBottom - (v / ymax) * (kBottom - kTop); };

    std::string svg;
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(kWidth) + "\" height=\"" +
           num(kHeight) + "\" viewBox=\"0 0 " + num(kWidth) + " " + num(kHeight) + "\">\n";
    svg += "<rect x=\"0\" y=\"0\" width=\"" + num(kWidth) + "\" height=\"" + num(kHeight) +
           "\" fill=\"white\"/>\n";
    svg += "<text x=\"" + num(kLeft) + "\" y=\"24\" font-family=\"sans-serif\" font-size=\"15\">" +
           dataset + " / " + surface + " (" + opts.split + " MRR, " + opts.mode + ")</text>\n";

    // y grid and ticks every 0.1
    for (double v = 0.0; v <= ymax + 1e-9; v += 0.1) {
        const double y = ypos(v);
        svg += "<line x1=\"" + num(kLeft) + "\" y1=\"" + num(y) + "\" x2=\"" + num(kRight) +
               "\" y2=\"" + num(y) + "\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n";
        svg += "<text x=\"" + num(kLeft - 8.0) + "\" y=\"" + num(y + 4.0) +
               "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">" +
               num(v).substr(0, 3) + "</text>\n";
    }

    // x ticks at every ratio present
    for (double r : ratios) {
        const double x = xpos(r);
        svg += "<line x1=\"" + num(x) + "\" y1=\"" + num(kBottom) + "\" x2=\"" + num(x) +
               "\" y2=\"" + num(kBottom + 5.0) + "\" stroke=\"#333333\" stroke-width=\"1\"/>\n";
        svg += "<text x=\"" + num(x) + "\" y=\"" + num(kBottom + 18.0) +
               "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">" +
               format_ratio(r) + "</text>\n";
    }
    svg += "<text x=\"" + num((kLeft + kRight) / 2.0) + "\" y=\"" + num(kBottom + 36.0) +
           "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">perturbation "
           "ratio k</text>\n";

    // axes
    svg += "<line x1=\"" + num(kLeft) + "\" y1=\"" + num(kTop) + "\" x2=\"" + num(kLeft) +
           "\" y2=\"" + num(kBottom) + "\" stroke=\"#333333\" stroke-width=\"1\"/>\n";
    svg += "<line x1=\"" + num(kLeft) + "\" y1=\"" + num(kBottom) + "\" x2=\"" + num(kRight) +
           "\" y2=\"" + num(kBottom) + "\" stroke=\"#333333\" stroke-width=\"1\"/>\n";

    int color = 0;
    double legend_y = kTop + 10.0;
    for (auto& [name, s] : by_model) {
        const char* stroke = kPalette[color % kPaletteSize];
        ++color;

        std::vector<std::size_t> order(s.ratio.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::sort(order.begin(), order.end(),
                  [&](std::size_t a, std::size_t b) { return s.ratio[a] < s.ratio[b]; });

        // whiskers
        for (auto i : order) {
            if (s.sd[i] <= 0.0) continue;
            const double x = xpos(s.ratio[i]);
            const double y1 = ypos(std::min(ymax, s.mean[i] + s.sd[i]));
            const double y2 = ypos(std::max(0.0, s.mean[i] - s.sd[i]));
            svg += "<line x1=\"" + num(x) + "\" y1=\"" + num(y1) + "\" x2=\"" + num(x) +
                   "\" y2=\"" + num(y2) + "\" stroke=\"" + stroke +
                   "\" stroke-width=\"1\" opacity=\"0.6\"/>\n";
        }

        std::string points;
        for (auto i : order) {
            if (!points.empty()) points += ' ';
            points += num(xpos(s.ratio[i])) + "," + num(ypos(s.mean[i]));
        }
        svg += "<polyline points=\"" + points + "\" fill=\"none\" stroke=\"" + stroke +
               "\" stroke-width=\"2\"/>\n";
        for (auto i : order) {
            svg += "<circle cx=\"" + num(xpos(s.ratio[i])) + "\" cy=\"" + num(ypos(s.mean[i])) +
                   "\" r=\"2.5\" fill=\"" + stroke + "\"/>\n";
        }

        svg += "<line x1=\"" + num(kRight + 12.0) + "\" y1=\"" + num(legend_y) + "\" x2=\"" +
               num(kRight + 34.0) + "\" y2=\"" + num(legend_y) + "\" stroke=\"" + stroke +
               "\" stroke-width=\"2\"/>\n";
        svg += "<text x=\"" + num(kRight + 40.0) + "\" y=\"" + num(legend_y + 4.0) +
               "\" font-family=\"sans-serif\" font-size=\"12\">" + name + "</text>\n";
        legend_y += 18.0;
    }

    svg += "</svg>\n";
    return svg;
}

int write_plots(const std::vector<ResultRow>& rows, const std::string& out_dir,
                const PlotOptions& opts) {
    auto agg = aggregate(rows);
    std::set<std::pair<std::string, std::string>> groups;
    for (const auto& a : agg) {
        if (a.split == opts.split && a.mode == opts.mode) groups.insert({a.dataset, a.surface});
    }
    if (groups.empty()) {
        std::fprintf(stderr, "[plot] nothing to plot for split=%s mode=%s\n", opts.split.c_str(),
                     opts.mode.c_str());
        return 0;
    }

    int written = 0;
    for (const auto& [dataset, surface] : groups) {
        const std::string svg = render_plot_svg(dataset, surface, agg, opts);
        if (svg.empty()) continue;
        const std::string path = out_dir + "/" + dataset + "_" + surface + ".svg";
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write plot: " + path);
        out << svg;
        out.flush();
        if (!out) throw std::runtime_error("plot write failed: " + path);
        ++written;
    }
    return written;
}

}  // namespace kge
