#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include <omp.h>

#include <CLI11.hpp>

#include "kge/kernels.hpp"
#include "kge/model.hpp"
#include "kge/rng.hpp"

namespace {

kge::MiniBatch synthetic_batch(int m, int num_entities, int num_relations, kge::Rng& rng) {
    kge::MiniBatch batch;
    batch.examples.reserve(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) {
        kge::KvsAllExample ex;
        ex.head = static_cast<std::int32_t>(rng.below(static_cast<std::uint64_t>(num_entities)));
        ex.rel = static_cast<std::int32_t>(rng.below(static_cast<std::uint64_t>(num_relations)));
        std::uint64_t n_tails = 1 + rng.below(8);
        for (std::uint64_t j = 0; j < n_tails; ++j) {
            ex.tails.push_back(
                static_cast<std::int32_t>(rng.below(static_cast<std::uint64_t>(num_entities))));
        }
        std::sort(ex.tails.begin(), ex.tails.end());
        ex.tails.erase(std::unique(ex.tails.begin(), ex.tails.end()), ex.tails.end());
        batch.examples.push_back(std::move(ex));
    }
    return batch;
}

double max_abs_diff(const kge::Matrix& a, const kge::Matrix& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.a.size(); ++i) {
        worst = std::max(worst, std::abs(a.a[i] - b.a[i]));
    }
    return worst;
}

template <typename F>
double time_ms(int iters, F&& body) {
    auto t0 = std::chrono::steady_clock::now();
    for (int i = 0; i < iters; ++i) body();
    auto t1 = std::chrono::steady_clock::now();
    return std::chrono::duration<double, std::milli>(t1 - t0).count() / iters;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"serial reference vs batched KvsAll kernel timing"};
    int num_entities = 2000;
    int num_relations = 50;
    int batch = 256;
    int dim = 32;
    int iters = 5;
    app.add_option("--entities", num_entities, "entity count");
    app.add_option("--relations", num_relations, "relation count");
    app.add_option("--batch", batch, "examples per batch");
    app.add_option("--dim", dim, "embedding dimension");
    app.add_option("--iters", iters, "timing repetitions");
    CLI11_PARSE(app, argc, argv);

    const int max_threads = omp_get_max_threads();
    std::printf("entities=%d relations=%d batch=%d dim=%d iters=%d threads=%d\n", num_entities,
                num_relations, batch, dim, iters, max_threads);
    std::printf("%-10s %14s %14s %14s %10s %12s\n", "model", "reference(ms)", "batched@1(ms)",
                "batched@N(ms)", "speedup", "max|dgrad|");

    for (kge::ModelKind kind :
         {kge::ModelKind::DistMult, kge::ModelKind::ComplEx, kge::ModelKind::QMult,
          kge::ModelKind::MuRE, kge::ModelKind::Keci}) {
        kge::ModelConfig cfg;
        cfg.kind = kind;
        cfg.num_entities = num_entities;
        cfg.num_relations = num_relations;
        cfg.dim = dim;
        cfg.validate();

        kge::Model model(cfg);
        model.init(7);
        kge::Rng rng(kge::derive_seed(11, "bench"));
        kge::MiniBatch mb = synthetic_batch(batch, num_entities, num_relations, rng);

        kge::GradientBuffer ref_grads, bat_grads;
        ref_grads.init(cfg);
        bat_grads.init(cfg);
        kge::BatchWorkspace ws;

        ref_grads.clear();
        kge::kvsall_reference(model, mb, ref_grads);
        bat_grads.clear();
        kge::kvsall_forward_backward(model, mb, bat_grads, ws);
        double dev = std::max(max_abs_diff(ref_grads.ent, bat_grads.ent),
                              max_abs_diff(ref_grads.rel, bat_grads.rel));

        double t_ref = time_ms(iters, [&] {
            ref_grads.clear();
            kge::kvsall_reference(model, mb, ref_grads);
        });

        omp_set_num_threads(1);
        double t_one = time_ms(iters, [&] {
            bat_grads.clear();
            kge::kvsall_forward_backward(model, mb, bat_grads, ws);
        });

        omp_set_num_threads(max_threads);
        double t_all = time_ms(iters, [&] {
            bat_grads.clear();
            kge::kvsall_forward_backward(model, mb, bat_grads, ws);
        });

        std::printf("%-10s %14.2f %14.2f %14.2f %9.1fx %12.3e\n", kge::to_string(kind), t_ref,
                    t_one, t_all, t_ref / t_all, dev);
    }
    return 0;
}
