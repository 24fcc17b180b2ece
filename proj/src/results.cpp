#include "kge/results.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <stdexcept>

namespace kge {

namespace {

std::string fmt(const char* spec, double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), spec, v);
    return buf;
}

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        auto pos = line.find(',', start);
        if (pos == std::string::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
}

double parse_double(const std::string& s, const char* what) {
    char* end = nullptr;
    double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0') {
        throw std::runtime_error(std::string("bad ") + what + " value: '" + s + "'");
    }
    return v;
}

std::uint64_t parse_u64(const std::string& s, const char* what) {
    char* end = nullptr;
    std::uint64_t v = std::strtoull(s.c_str(), &end, 10);
    if (end == s.c_str() || *end != '\0') {
        throw std::runtime_error(std::string("bad ") + what + " value: '" + s + "'");
    }
    return v;
}

void mean_std(const std::vector<double>& xs, double& mean, double& sd) {
    const auto n = static_cast<double>(xs.size());
    mean = 0.0;
    for (double x : xs) mean += x;
    mean /= n;
    sd = 0.0;
    if (xs.size() > 1) {
        double acc = 0.0;
        for (double x : xs) acc += (x - mean) * (x - mean);
        sd = std::sqrt(acc / (n - 1.0));
    }
}

}  // namespace

std::string format_ratio(double ratio) { return fmt("%.10g", ratio); }

std::string csv_header() {
    return "dataset,model,surface,ratio,seed,split,mode,mrr,hits1,hits3,hits10,epochs,"
           "wall_seconds";
}

std::string to_csv_line(const ResultRow& r) {
    std::string out;
    out += r.dataset + ',' + r.model + ',' + r.surface + ',' + format_ratio(r.ratio) + ',';
    out += std::to_string(r.seed) + ',' + r.split + ',' + r.mode + ',';
    out += fmt("%.6f", r.mrr) + ',' + fmt("%.6f", r.hits1) + ',' + fmt("%.6f", r.hits3) + ',' +
           fmt("%.6f", r.hits10) + ',';
    out += std::to_string(r.epochs) + ',' + fmt("%.3f", r.wall_seconds);
    return out;
}

ResultRow parse_csv_line(const std::string& line) {
    auto f = split_fields(line);
    if (f.size() != 13) {
        throw std::runtime_error("expected 13 CSV fields, got " + std::to_string(f.size()) +
                                 " in: " + line);
    }
    ResultRow r;
    r.dataset = f[0];
    r.model = f[1];
    r.surface = f[2];
    r.ratio = parse_double(f[3], "ratio");
    r.seed = parse_u64(f[4], "seed");
    r.split = f[5];
    r.mode = f[6];
    r.mrr = parse_double(f[7], "mrr");
    r.hits1 = parse_double(f[8], "hits1");
    r.hits3 = parse_double(f[9], "hits3");
    r.hits10 = parse_double(f[10], "hits10");
    r.epochs = static_cast<int>(parse_u64(f[11], "epochs"));
    r.wall_seconds = parse_double(f[12], "wall_seconds");
    return r;
}

std::vector<ResultRow> read_results(const std::string& path) {
    std::ifstream in(path);
    std::vector<ResultRow> rows;
    if (!in) return rows;

    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (lineno == 1) {
            if (line != csv_header()) {
                throw std::runtime_error(path + ": unexpected results header: " + line);
            }
            continue;
        }
        try {
            rows.push_back(parse_csv_line(line));
        } catch (const std::exception& e) {
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return rows;
}

void append_results(const std::string& path, const std::vector<ResultRow>& rows) {
    const bool fresh = !std::ifstream(path).good();
    std::ofstream out(path, std::ios::app);
    if (!out) throw std::runtime_error("cannot append results: " + path);
    if (fresh) out << csv_header() << '\n';
    for (const auto& r : rows) out << to_csv_line(r) << '\n';
    out.flush();
    if (!out) throw std::runtime_error("results write failed: " + path);
}

void write_results(const std::string& path, const std::vector<ResultRow>& rows) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write results: " + tmp);
        out << csv_header() << '\n';
        for (const auto& r : rows) out << to_csv_line(r) << '\n';
        out.flush();
        if (!out) throw std::runtime_error("results write failed: " + tmp);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0) {
        throw std::runtime_error("cannot replace results file: " + path);
    }
}

std::string aggregate_csv_header() {
    return "dataset,model,surface,ratio,split,mode,n,mrr_mean,mrr_std,hits1_mean,hits1_std,"
           "hits3_mean,hits3_std,hits10_mean,hits10_std";
}

std::string to_csv_line(const AggregateRow& r) {
    std::string out;
    out += r.dataset + ',' + r.model + ',' + r.surface + ',' + format_ratio(r.ratio) + ',';
    out += r.split + ',' + r.mode + ',' + std::to_string(r.n);
    const double vals[] = {r.mrr_mean,   r.mrr_std,   r.hits1_mean,  r.hits1_std,
                           r.hits3_mean, r.hits3_std, r.hits10_mean, r.hits10_std};
    for (double v : vals) out += ',' + fmt("%.6f", v);
    return out;
}

std::vector<AggregateRow> aggregate(const std::vector<ResultRow>& rows,
                                    std::vector<std::string>* warnings) {
    using Key = std::tuple<std::string, std::string, std::string, std::string, std::string,
                           std::string>;
    struct Group {
        double ratio = 0.0;
        std::vector<std::uint64_t> seeds;
        std::vector<double> mrr, h1, h3, h10;
    };
    std::map<Key, Group> groups;

    std::size_t errors = 0;
    for (const auto& r : rows) {
        if (r.is_error()) {
            ++errors;
            continue;
        }
        Key key{r.dataset, r.model, r.surface, format_ratio(r.ratio), r.split, r.mode};
        Group& g = groups[key];
        g.ratio = r.ratio;
        g.seeds.push_back(r.seed);
        g.mrr.push_back(r.mrr);
        g.h1.push_back(r.hits1);
        g.h3.push_back(r.hits3);
        g.h10.push_back(r.hits10);
    }

    std::size_t max_seeds = 0;
    for (auto& [key, g] : groups) max_seeds = std::max(max_seeds, g.seeds.size());

    std::vector<AggregateRow> out;
    out.reserve(groups.size());
    for (auto& [key, g] : groups) {
        std::set<std::uint64_t> uniq(g.seeds.begin(), g.seeds.end());
        const std::string cell = std::get<0>(key) + "/" + std::get<1>(key) + "/" +
                                 std::get<2>(key) + "/k=" + std::get<3>(key) + "/" +
                                 std::get<4>(key) + "/" + std::get<5>(key);
        if (warnings && uniq.size() != g.seeds.size()) {
            warnings->push_back("duplicate seeds in " + cell);
        }
        if (warnings && g.seeds.size() < max_seeds) {
            warnings->push_back("incomplete seed set in " + cell + ": " +
                                std::to_string(g.seeds.size()) + " of " +
                                std::to_string(max_seeds));
        }

        AggregateRow a;
        a.dataset = std::get<0>(key);
        a.model = std::get<1>(key);
        a.surface = std::get<2>(key);
        a.ratio = g.ratio;
        a.split = std::get<4>(key);
        a.mode = std::get<5>(key);
        a.n = static_cast<std::int64_t>(g.seeds.size());
        mean_std(g.mrr, a.mrr_mean, a.mrr_std);
        mean_std(g.h1, a.hits1_mean, a.hits1_std);
        mean_std(g.h3, a.hits3_mean, a.hits3_std);
        mean_std(g.h10, a.hits10_mean, a.hits10_std);
        out.push_back(std::move(a));
    }
    if (warnings && errors > 0) {
        warnings->push_back(std::to_string(errors) + " error row(s) skipped");
    }

    std::sort(out.begin(), out.end(), [](const AggregateRow& x, const AggregateRow& y) {
        return std::tie(x.dataset, x.model, x.surface, x.ratio, x.split, x.mode) <
               std::tie(y.dataset, y.model, y.surface, y.ratio, y.split, y.mode);
    });
    return out;
}

}  // namespace kge
