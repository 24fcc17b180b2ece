#pragma once

#include <string>
#include <vector>

#include "kge/results.hpp"

namespace kge {

struct PlotOptions {
    std::string split = "test";
    std::string mode = "filtered";
};

// builds the SVG text for one (dataset, surface) selection; exposed for tests
std::string render_plot_svg(const std::string& dataset, const std::string& surface,
                            const std::vector<AggregateRow>& agg, const PlotOptions& opts);

// One SVG per (dataset, surface) with data under opts.split/opts.mode:
// x = ratio (log-scaled, 0 pinned at the left edge), y = mean MRR with
// +-sigma whiskers, one polyline per model. Returns the number of files
// written; an empty selection writes nothing and warns.
int write_plots(const std::vector<ResultRow>& rows, const std::string& out_dir,
                const PlotOptions& opts);

}  // namespace kge
