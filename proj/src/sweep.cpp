#include "kge/sweep.hpp"

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdio>
#include <limits>
#include <map>
#include <mutex>
#include <set>
#include <thread>

namespace kge {

namespace {

constexpr std::int32_t kLargeEntityCount = 10000;

struct LoadedDataset {
    KnowledgeGraph graph;
    FilterIndex filter;
    bool large = false;
};

struct DatasetCache {
    std::mutex mu;
    std::map<std::string, std::shared_ptr<LoadedDataset>> entries;

    std::shared_ptr<LoadedDataset> get(const std::string& root, const std::string& name,
                                       bool reciprocal) {
        {
            std::lock_guard<std::mutex> lock(mu);
            auto it = entries.find(name);
            if (it != entries.end()) return it->second;
        }
        auto loaded = std::make_shared<LoadedDataset>();
        loaded->graph = load_dataset(root + "/" + name);
        if (reciprocal) add_reciprocal_relations(loaded->graph);
        loaded->filter = FilterIndex::build(loaded->graph);
        loaded->large = loaded->graph.vocab.num_entities() > kLargeEntityCount;

        std::lock_guard<std::mutex> lock(mu);
        auto [it, inserted] = entries.emplace(name, std::move(loaded));
        return it->second;
    }
};

// cap on concurrently running large-dataset cells
struct Gate {
    std::mutex mu;
    std::condition_variable cv;
    int free;

    explicit Gate(int n) : free(n) {}
    void acquire() {
        std::unique_lock<std::mutex> lock(mu);
        cv.wait(lock, [&] { return free > 0; });
        --free;
    }
    void release() {
        {
            std::lock_guard<std::mutex> lock(mu);
            ++free;
        }
        cv.notify_one();
    }
};

struct Job {
    std::string dataset;
    ModelKind model;
    double ratio = 0.0;
    std::uint64_t seed = 0;
    std::vector<Surface> surfaces;  // several only for a shared ratio-0 baseline
};

using CellKey = std::tuple<std::string, std::string, std::string, std::string, std::uint64_t>;

CellKey make_key(const std::string& dataset, ModelKind model, Surface surface, double ratio,
                 std::uint64_t seed) {
    return {dataset, to_string(model), to_string(surface), format_ratio(ratio), seed};
}

}  // namespace

void SweepSpec::validate() const {
    if (datasets.empty() || models.empty() || surfaces.empty() || ratios.empty() || seeds.empty()) {
        throw std::invalid_argument("sweep needs non-empty dataset/model/surface/ratio/seed lists");
    }
    for (double r : ratios) {
        if (r < 0.0 || r > 1.0) throw std::invalid_argument("sweep ratio outside [0,1]");
    }
    train.validate();
}

std::uint64_t cell_seed(const std::string& dataset, ModelKind model, Surface surface, double ratio,
                        std::uint64_t user_seed) {
    if (ratio == 0.0) surface = Surface::None;
    std::string tag = "cell|" + dataset + "|" + to_string(model) + "|" + to_string(surface) +
                      "|" + format_ratio(ratio) + "|" + std::to_string(user_seed);
    return splitmix64(fnv1a(tag));
}

std::vector<ResultRow> run_cell(const KnowledgeGraph& graph, const FilterIndex& filter,
                                const std::string& dataset_name, ModelKind model, Surface surface,
                                double ratio, std::uint64_t user_seed, const TrainConfig& base,
                                TieRule tie) {
    const auto t0 = std::chrono::steady_clock::now();

    TrainConfig cfg = base;
    cfg.kind = model;
    cfg.attack.surface = surface;
    cfg.attack.ratio = ratio;
    cfg.seed = cell_seed(dataset_name, model, surface, ratio, user_seed);

    TrainReport report;
    Model trained = train_model(graph, cfg, &report);

    std::vector<ResultRow> rows;
    for (RankMode mode : {RankMode::Raw, RankMode::Filtered}) {
        EvalReport ev = evaluate(trained, graph.test, filter, mode, tie);
        ResultRow row;
        row.dataset = dataset_name;
        row.model = to_string(model);
        row.surface = to_string(surface);
        row.ratio = ratio;
        row.seed = user_seed;
        row.split = "test";
        row.mode = to_string(mode);
        row.mrr = ev.mrr;
        row.hits1 = ev.hits1;
        row.hits3 = ev.hits3;
        row.hits10 = ev.hits10;
        row.epochs = cfg.epochs;
        rows.push_back(std::move(row));
    }
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    for (auto& row : rows) row.wall_seconds = wall;
    return rows;
}

int run_sweep(const SweepSpec& spec) {
    spec.validate();

    // per-cell seeds must not collide across the grid (ratio-0 cells collapse
    // across surfaces by design and are excluded from the check)
    {
        std::set<CellKey> tuples;
        std::set<std::uint64_t> seeds;
        for (const auto& d : spec.datasets)
            for (auto m : spec.models)
                for (auto s : spec.surfaces)
                    for (double r : spec.ratios)
                        for (auto u : spec.seeds) {
                            Surface eff = r == 0.0 ? Surface::None : s;
                            if (tuples.insert(make_key(d, m, eff, r, u)).second) {
                                seeds.insert(cell_seed(d, m, s, r, u));
                            }
                        }
        if (seeds.size() != tuples.size()) {
            throw std::runtime_error("cell seed collision across the sweep grid");
        }
    }

    // resume bookkeeping: keep complete cells, purge error rows and cells left
    // half-written by an interrupted append
    std::vector<ResultRow> kept = read_results(spec.out_csv);
    std::map<CellKey, std::set<std::string>> have;  // cell -> modes present (split=test)
    auto rebuild_have = [&] {
        have.clear();
        for (const auto& r : kept) {
            if (r.split != "test") continue;
            have[{r.dataset, r.model, r.surface, format_ratio(r.ratio), r.seed}].insert(r.mode);
        }
    };
    rebuild_have();
    auto complete = [&](const CellKey& key) {
        auto it = have.find(key);
        return it != have.end() && it->second.count("raw") && it->second.count("filtered");
    };
    {
        const auto before = kept.size();
        std::erase_if(kept, [&](const ResultRow& r) {
            return r.is_error() ||
                   !complete({r.dataset, r.model, r.surface, format_ratio(r.ratio), r.seed});
        });
        if (kept.size() != before) {
            std::fprintf(stderr, "[sweep] purging %zu error/incomplete row(s) for re-run\n",
                         before - kept.size());
            write_results(spec.out_csv, kept);
            rebuild_have();
        }
    }

    // job list; shared baselines group the surfaces of one (dataset,model,seed)
    std::vector<Job> jobs;
    std::size_t skipped = 0;
    for (const auto& d : spec.datasets) {
        for (auto m : spec.models) {
            for (auto u : spec.seeds) {
                for (double r : spec.ratios) {
                    std::vector<Surface> missing;
                    for (auto s : spec.surfaces) {
                        if (complete(make_key(d, m, s, r, u))) {
                            ++skipped;
                        } else {
                            missing.push_back(s);
                        }
                    }
                    if (missing.empty()) continue;
                    if (r == 0.0 && spec.share_baseline) {
                        jobs.push_back({d, m, r, u, std::move(missing)});
                    } else {
                        for (auto s : missing) jobs.push_back({d, m, r, u, {s}});
                    }
                }
            }
        }
    }
    if (skipped > 0) {
        std::fprintf(stderr, "[sweep] %zu cell(s) already done, %zu job(s) to run\n", skipped,
                     jobs.size());
    }

    DatasetCache cache;
    Gate large_gate(std::max(1, spec.max_large_parallel));
    std::mutex out_mu;
    std::atomic<std::size_t> next{0};
    std::atomic<std::size_t> failures{0};
    std::atomic<std::size_t> done{0};

    auto worker = [&] {
        while (true) {
            const std::size_t j = next.fetch_add(1);
            if (j >= jobs.size()) return;
            const Job& job = jobs[j];

            std::vector<ResultRow> rows;
            bool failed = false;
            try {
                auto data = cache.get(spec.data_root, job.dataset, spec.reciprocal);
                const bool gated = data->large;
                if (gated) large_gate.acquire();
                try {
                    // ratio-0 training is surface-independent; a shared job
                    // trains once and labels the rows per requested surface
                    auto cell = run_cell(data->graph, data->filter, job.dataset, job.model,
                                         job.surfaces.front(), job.ratio, job.seed, spec.train,
                                         spec.tie);
                    for (std::size_t s = 0; s < job.surfaces.size(); ++s) {
                        for (auto row : cell) {
                            row.surface = to_string(job.surfaces[s]);
                            rows.push_back(std::move(row));
                        }
                    }
                } catch (...) {
                    if (gated) large_gate.release();
                    throw;
                }
                if (gated) large_gate.release();
            } catch (const std::exception& e) {
                failed = true;
                std::lock_guard<std::mutex> lock(out_mu);
                std::fprintf(stderr, "[sweep] cell %s/%s/k=%s/seed=%llu failed: %s\n",
                             job.dataset.c_str(), to_string(job.model),
                             format_ratio(job.ratio).c_str(),
                             static_cast<unsigned long long>(job.seed), e.what());
                for (auto s : job.surfaces) {
                    ResultRow row;
                    row.dataset = job.dataset;
                    row.model = to_string(job.model);
                    row.surface = to_string(s);
                    row.ratio = job.ratio;
                    row.seed = job.seed;
                    row.split = "error";
                    row.mode = "error";
                    row.mrr = row.hits1 = row.hits3 = row.hits10 =
                        std::numeric_limits<double>::quiet_NaN();
                    rows.push_back(std::move(row));
                }
            }

            {
                std::lock_guard<std::mutex> lock(out_mu);
                append_results(spec.out_csv, rows);
                if (failed) ++failures;
                const auto d = ++done;
                std::fprintf(stderr, "[sweep] %zu/%zu %s/%s/k=%s/seed=%llu%s\n", d, jobs.size(),
                             job.dataset.c_str(), to_string(job.model),
                             format_ratio(job.ratio).c_str(),
                             static_cast<unsigned long long>(job.seed),
                             failed ? " FAILED" : "");
            }
        }
    };

    int workers = spec.parallel > 0 ? spec.parallel
                                    : static_cast<int>(std::thread::hardware_concurrency());
    workers = std::max(1, std::min<int>(workers, static_cast<int>(jobs.size())));
    if (workers <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        for (int i = 0; i < workers; ++i) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    if (failures > 0) {
        std::fprintf(stderr, "[sweep] %zu job(s) failed\n", failures.load());
        return 1;
    }
    // a clean run means every grid cell is now complete
    for (const auto& r : read_results(spec.out_csv)) {
        if (r.is_error()) return 1;
    }
    return 0;
}

}  // namespace kge
