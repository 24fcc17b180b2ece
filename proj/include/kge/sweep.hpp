#pragma once

#include "kge/eval.hpp"
#include "kge/results.hpp"
#include "kge/train.hpp"

namespace kge {

struct SweepSpec {
    std::vector<std::string> datasets;          // directory names under data_root
    std::vector<ModelKind> models;
    std::vector<Surface> surfaces;
    std::vector<double> ratios;
    std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
    std::string data_root = "data";
    std::string out_csv = "results.csv";
    bool share_baseline = false;  // train ratio-0 cells once per (dataset, model, seed)
    bool reciprocal = false;
    int parallel = 0;             // <= 0: hardware concurrency
    int max_large_parallel = 1;   // concurrent cells on datasets with |E| > 10000
    TieRule tie = TieRule::Mean;
    TrainConfig train;            // template; kind/attack/seed are set per cell

    void validate() const;
};

// Stable per-cell seed. Ratio 0 normalizes the surface away so that baseline
// cells are identical across surfaces.
std::uint64_t cell_seed(const std::string& dataset, ModelKind model, Surface surface, double ratio,
                        std::uint64_t user_seed);

// Trains one cell and evaluates the test split raw + filtered (two rows).
std::vector<ResultRow> run_cell(const KnowledgeGraph& graph, const FilterIndex& filter,
                                const std::string& dataset_name, ModelKind model, Surface surface,
                                double ratio, std::uint64_t user_seed, const TrainConfig& base,
                                TieRule tie);

// Executes the grid, appending to spec.out_csv. Existing complete rows are
// skipped, error rows are purged and re-run. Returns 0 only when every cell of
// the grid ended up with good rows.
int run_sweep(const SweepSpec& spec);

}  // namespace kge
