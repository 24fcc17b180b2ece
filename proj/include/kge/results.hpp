#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace kge {

struct ResultRow {
    std::string dataset;
    std::string model;
    std::string surface;
    double ratio = 0.0;
    std::uint64_t seed = 0;
    std::string split;  // "test", or "error" for failed cells
    std::string mode;   // "raw" / "filtered"
    double mrr = 0.0;
    double hits1 = 0.0;
    double hits3 = 0.0;
    double hits10 = 0.0;
    int epochs = 0;
    double wall_seconds = 0.0;

    bool is_error() const { return split == "error"; }
};

// canonical, locale-independent formatting shared by the CSV and the per-cell
// seed derivation
std::string format_ratio(double ratio);

std::string csv_header();
std::string to_csv_line(const ResultRow& row);

// strict parse of one data line; throws with context on malformed input
ResultRow parse_csv_line(const std::string& line);

// Reads a results file (header validated). A missing file yields an empty set.
std::vector<ResultRow> read_results(const std::string& path);

// Appends rows, writing the header first when the file does not exist yet.
void append_results(const std::string& path, const std::vector<ResultRow>& rows);

// Rewrites the file with exactly these rows (used to purge error rows).
void write_results(const std::string& path, const std::vector<ResultRow>& rows);

struct AggregateRow {
    std::string dataset;
    std::string model;
    std::string surface;
    double ratio = 0.0;
    std::string split;
    std::string mode;
    std::int64_t n = 0;
    double mrr_mean = 0.0, mrr_std = 0.0;
    double hits1_mean = 0.0, hits1_std = 0.0;
    double hits3_mean = 0.0, hits3_std = 0.0;
    double hits10_mean = 0.0, hits10_std = 0.0;
};

std::string aggregate_csv_header();
std::string to_csv_line(const AggregateRow& row);

// Mean and sample standard deviation over seeds per (dataset, model, surface,
// ratio, split, mode). Error rows are skipped; duplicate seeds and uneven seed
// coverage across groups are reported through warnings.
std::vector<AggregateRow> aggregate(const std::vector<ResultRow>& rows,
                                    std::vector<std::string>* warnings = nullptr);

}  // namespace kge
