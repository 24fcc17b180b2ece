#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "kge/checkpoint.hpp"
#include "kge/config_file.hpp"
#include "kge/eval.hpp"
#include "kge/plot.hpp"
#include "kge/results.hpp"
#include "kge/sweep.hpp"
#include "kge/train.hpp"

namespace {

std::string dir_basename(const std::string& dir) {
    std::filesystem::path p(dir);
    if (p.filename().empty()) p = p.parent_path();
    return p.filename().string();
}

double parse_double_strict(const std::string& s, const char* what) {
    char* end = nullptr;
    double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0') {
        throw std::runtime_error(std::string("bad ") + what + ": '" + s + "'");
    }
    return v;
}

std::uint64_t parse_u64_strict(const std::string& s, const char* what) {
    char* end = nullptr;
    std::uint64_t v = std::strtoull(s.c_str(), &end, 10);
    if (end == s.c_str() || *end != '\0') {
        throw std::runtime_error(std::string("bad ") + what + ": '" + s + "'");
    }
    return v;
}

struct TrainArgs {
    std::string dataset_dir;
    std::string dataset_name;
    std::string model = "distmult";
    std::string attack = "none";
    double ratio = 0.0;
    std::string pp_mode = "persistent";
    double noise_low = -0.1;
    double noise_high = 0.1;
    std::uint64_t seed = 1;
    int epochs = 100;
    double lr = 0.1;
    int batch_size = 1024;
    int dim = 32;
    std::string optimizer = "adam";
    int keci_p = 0;
    int keci_q = 1;
    bool qmult_raw_relations = false;
    bool reciprocal = false;
    std::string tie = "mean";
    std::string out_csv;
    std::string checkpoint_path;
    std::string rank_dump;
};

int cmd_train(const TrainArgs& a) {
    const std::string name = a.dataset_name.empty() ? dir_basename(a.dataset_dir) : a.dataset_name;
    kge::KnowledgeGraph graph = kge::load_dataset(a.dataset_dir);
    if (a.reciprocal) kge::add_reciprocal_relations(graph);

    kge::TrainConfig cfg;
    cfg.kind = kge::model_kind_from_string(a.model);
    cfg.dim = a.dim;
    cfg.keci_p = a.keci_p;
    cfg.keci_q = a.keci_q;
    cfg.qmult_normalize = !a.qmult_raw_relations;
    cfg.lr = a.lr;
    cfg.epochs = a.epochs;
    cfg.batch_size = a.batch_size;
    cfg.optimizer = kge::optimizer_from_string(a.optimizer);
    cfg.attack.surface = kge::surface_from_string(a.attack);
    cfg.attack.ratio = a.ratio;
    cfg.attack.pp_mode = kge::pp_mode_from_string(a.pp_mode);
    cfg.attack.noise = {a.noise_low, a.noise_high};
    cfg.seed = kge::cell_seed(name, cfg.kind, cfg.attack.surface, a.ratio, a.seed);
    const kge::TieRule tie = kge::tie_rule_from_string(a.tie);

    std::fprintf(stderr, "[train] %s: |E|=%d |R|=%d train=%zu valid=%zu test=%zu\n", name.c_str(),
                 graph.vocab.num_entities(), graph.vocab.num_relations(), graph.train.size(),
                 graph.valid.size(), graph.test.size());

    kge::TrainReport report;
    kge::Model model = kge::train_model(graph, cfg, &report);
    for (std::size_t i = 0; i < report.epoch_loss.size(); ++i) {
        if ((i + 1) % 10 == 0 || i == 0 || i + 1 == report.epoch_loss.size()) {
            std::fprintf(stderr, "[train] epoch %zu/%d loss %.6f\n", i + 1, cfg.epochs,
                         report.epoch_loss[i]);
        }
    }

    const auto filter = kge::FilterIndex::build(graph);
    std::vector<kge::ResultRow> rows;
    for (kge::RankMode mode : {kge::RankMode::Raw, kge::RankMode::Filtered}) {
        std::vector<double> ranks;
        kge::EvalReport ev = kge::evaluate(model, graph.test, filter, mode, tie,
                                           a.rank_dump.empty() ? nullptr : &ranks);
        std::printf("%s test %s: mrr=%.6f hits1=%.6f hits3=%.6f hits10=%.6f (n=%lld)\n",
                    name.c_str(), kge::to_string(mode), ev.mrr, ev.hits1, ev.hits3, ev.hits10,
                    static_cast<long long>(ev.n_evaluated));

        kge::ResultRow row;
        row.dataset = name;
        row.model = kge::to_string(cfg.kind);
        row.surface = kge::to_string(cfg.attack.surface);
        row.ratio = a.ratio;
        row.seed = a.seed;
        row.split = "test";
        row.mode = kge::to_string(mode);
        row.mrr = ev.mrr;
        row.hits1 = ev.hits1;
        row.hits3 = ev.hits3;
        row.hits10 = ev.hits10;
        row.epochs = cfg.epochs;
        row.wall_seconds = report.wall_seconds;
        rows.push_back(std::move(row));

        if (!a.rank_dump.empty() && mode == kge::RankMode::Filtered) {
            std::ofstream dump(a.rank_dump, std::ios::trunc);
            if (!dump) throw std::runtime_error("cannot write rank dump: " + a.rank_dump);
            for (std::size_t i = 0; i < graph.test.size(); ++i) {
                const auto& t = graph.test[i];
                dump << graph.vocab.entities[static_cast<std::size_t>(t.h)] << '\t'
                     << graph.vocab.relations[static_cast<std::size_t>(t.r)] << '\t'
                     << graph.vocab.entities[static_cast<std::size_t>(t.t)] << '\t' << ranks[i]
                     << '\n';
            }
        }
    }

    if (!a.out_csv.empty()) kge::append_results(a.out_csv, rows);
    if (!a.checkpoint_path.empty()) {
        kge::save_checkpoint(a.checkpoint_path, model, graph.vocab.fingerprint(), cfg.epochs);
    }
    return 0;
}

struct SweepArgs {
    std::string config_path;
    std::vector<std::string> datasets, models, surfaces, ratios, seeds;
    std::string data_root, out_csv, optimizer, pp_mode, tie;
    int epochs = -1, batch_size = -1, dim = -1, keci_p = -1, keci_q = -1;
    double lr = -1.0, noise_low = 0.0, noise_high = 0.0;
    bool noise_set = false;
    int parallel = -1, max_large_parallel = -1;
    bool share_baseline = false, no_share_baseline = false;
    bool reciprocal = false, qmult_raw_relations = false;
};

int cmd_sweep(const SweepArgs& a) {
    kge::SweepSpec spec;
    spec.datasets = {"UMLS", "KINSHIP"};
    spec.surfaces = {kge::Surface::GP, kge::Surface::LP, kge::Surface::PP};
    spec.models = {kge::ModelKind::DistMult, kge::ModelKind::ComplEx, kge::ModelKind::QMult,
                   kge::ModelKind::MuRE, kge::ModelKind::Keci};
    spec.ratios = {0, 0.01, 0.02, 0.04, 0.08, 0.16, 0.32, 0.64};

    // config file values override the built-in defaults
    if (!a.config_path.empty()) {
        kge::ConfigFile cf = kge::ConfigFile::parse_file(a.config_path);
        auto list = [&](const char* key) { return cf.find("sweep", key); };
        if (auto* v = list("datasets")) spec.datasets = kge::split_list(*v);
        if (auto* v = list("models")) {
            spec.models.clear();
            for (auto& s : kge::split_list(*v)) spec.models.push_back(kge::model_kind_from_string(s));
        }
        if (auto* v = list("surfaces")) {
            spec.surfaces.clear();
            for (auto& s : kge::split_list(*v)) spec.surfaces.push_back(kge::surface_from_string(s));
        }
        if (auto* v = list("ratios")) {
            spec.ratios.clear();
            for (auto& s : kge::split_list(*v)) spec.ratios.push_back(parse_double_strict(s, "ratio"));
        }
        if (auto* v = list("seeds")) {
            spec.seeds.clear();
            for (auto& s : kge::split_list(*v)) spec.seeds.push_back(parse_u64_strict(s, "seed"));
        }
        if (auto* v = list("data_root")) spec.data_root = *v;
        if (auto* v = list("out")) spec.out_csv = *v;
        if (auto* v = list("share_baseline")) spec.share_baseline = kge::parse_bool(*v);
        if (auto* v = list("parallel")) spec.parallel = static_cast<int>(parse_u64_strict(*v, "parallel"));
        if (auto* v = list("max_large_parallel")) {
            spec.max_large_parallel = static_cast<int>(parse_u64_strict(*v, "max_large_parallel"));
        }
        if (auto* v = list("reciprocal")) spec.reciprocal = kge::parse_bool(*v);
        if (auto* v = list("tie")) spec.tie = kge::tie_rule_from_string(*v);

        if (auto* v = cf.find("train", "epochs")) spec.train.epochs = static_cast<int>(parse_u64_strict(*v, "epochs"));
        if (auto* v = cf.find("train", "lr")) spec.train.lr = parse_double_strict(*v, "lr");
        if (auto* v = cf.find("train", "batch_size")) spec.train.batch_size = static_cast<int>(parse_u64_strict(*v, "batch_size"));
        if (auto* v = cf.find("train", "dim")) spec.train.dim = static_cast<int>(parse_u64_strict(*v, "dim"));
        if (auto* v = cf.find("train", "optimizer")) spec.train.optimizer = kge::optimizer_from_string(*v);
        if (auto* v = cf.find("train", "keci_p")) spec.train.keci_p = static_cast<int>(parse_u64_strict(*v, "keci_p"));
        if (auto* v = cf.find("train", "keci_q")) spec.train.keci_q = static_cast<int>(parse_u64_strict(*v, "keci_q"));
        if (auto* v = cf.find("train", "qmult_normalize")) spec.train.qmult_normalize = kge::parse_bool(*v);

        if (auto* v = cf.find("attack", "pp_mode")) spec.train.attack.pp_mode = kge::pp_mode_from_string(*v);
        if (auto* v = cf.find("attack", "noise_low")) spec.train.attack.noise.low = parse_double_strict(*v, "noise_low");
        if (auto* v = cf.find("attack", "noise_high")) spec.train.attack.noise.high = parse_double_strict(*v, "noise_high");
    }

    // explicit CLI flags override the config file
    if (!a.datasets.empty()) spec.datasets = a.datasets;
    if (!a.models.empty()) {
        spec.models.clear();
        for (auto& s : a.models) spec.models.push_back(kge::model_kind_from_string(s));
    }
    if (!a.surfaces.empty()) {
        spec.surfaces.clear();
        for (auto& s : a.surfaces) spec.surfaces.push_back(kge::surface_from_string(s));
    }
    if (!a.ratios.empty()) {
        spec.ratios.clear();
        for (auto& s : a.ratios) spec.ratios.push_back(parse_double_strict(s, "ratio"));
    }
    if (!a.seeds.empty()) {
        spec.seeds.clear();
        for (auto& s : a.seeds) spec.seeds.push_back(parse_u64_strict(s, "seed"));
    }
    if (!a.data_root.empty()) spec.data_root = a.data_root;
    if (!a.out_csv.empty()) spec.out_csv = a.out_csv;
    if (a.share_baseline) spec.share_baseline = true;
    if (a.no_share_baseline) spec.share_baseline = false;
    if (a.parallel >= 0) spec.parallel = a.parallel;
    if (a.max_large_parallel >= 0) spec.max_large_parallel = a.max_large_parallel;
    if (a.reciprocal) spec.reciprocal = true;
    if (!a.tie.empty()) spec.tie = kge::tie_rule_from_string(a.tie);
    if (a.epochs >= 0) spec.train.epochs = a.epochs;
    if (a.lr >= 0.0) spec.train.lr = a.lr;
    if (a.batch_size >= 0) spec.train.batch_size = a.batch_size;
    if (a.dim >= 0) spec.train.dim = a.dim;
    if (a.keci_p >= 0) spec.train.keci_p = a.keci_p;
    if (a.keci_q >= 0) spec.train.keci_q = a.keci_q;
    if (!a.optimizer.empty()) spec.train.optimizer = kge::optimizer_from_string(a.optimizer);
    if (a.qmult_raw_relations) spec.train.qmult_normalize = false;
    if (!a.pp_mode.empty()) spec.train.attack.pp_mode = kge::pp_mode_from_string(a.pp_mode);
    if (a.noise_set) spec.train.attack.noise = {a.noise_low, a.noise_high};

    return kge::run_sweep(spec);
}

int cmd_aggregate(const std::string& in, const std::string& out) {
    auto rows = kge::read_results(in);
    if (rows.empty()) {
        std::fprintf(stderr, "[aggregate] no rows in %s\n", in.c_str());
        return 1;
    }
    std::vector<std::string> warnings;
    auto agg = kge::aggregate(rows, &warnings);
    for (const auto& w : warnings) std::fprintf(stderr, "[aggregate] warning: %s\n", w.c_str());

    std::string text = kge::aggregate_csv_header() + "\n";
    for (const auto& a : agg) text += kge::to_csv_line(a) + "\n";
    if (out.empty() || out == "-") {
        std::fputs(text.c_str(), stdout);
    } else {
        std::ofstream f(out, std::ios::trunc);
        if (!f) throw std::runtime_error("cannot write " + out);
        f << text;
    }
    return 0;
}

int cmd_plot(const std::string& in, const std::string& out_dir, const kge::PlotOptions& opts) {
    auto rows = kge::read_results(in);
    std::filesystem::create_directories(out_dir);
    int n = kge::write_plots(rows, out_dir, opts);
    std::fprintf(stderr, "[plot] wrote %d file(s) to %s\n", n, out_dir.c_str());
    return n > 0 ? 0 : 1;
}

int cmd_stats(const std::string& data_root, const std::vector<std::string>& names,
              const std::string& single_dir, const std::string& out) {
    std::string text = "dataset,num_entities,num_relations,train,valid,test,train_degree\n";
    auto emit = [&](const std::string& name, const std::string& dir) {
        kge::KnowledgeGraph g = kge::load_dataset(dir);
        kge::DatasetStats s = kge::degree_stats(g, name);
        char buf[256];
        std::snprintf(buf, sizeof(buf), "%s,%lld,%lld,%lld,%lld,%lld,%.4f\n", s.name.c_str(),
                      static_cast<long long>(s.num_entities),
                      static_cast<long long>(s.num_relations), static_cast<long long>(s.train),
                      static_cast<long long>(s.valid), static_cast<long long>(s.test),
                      s.train_degree);
        text += buf;
    };

    if (!single_dir.empty()) {
        emit(dir_basename(single_dir), single_dir);
    } else {
        for (const auto& name : names) emit(name, data_root + "/" + name);
    }

    if (out.empty() || out == "-") {
        std::fputs(text.c_str(), stdout);
    } else {
        std::ofstream f(out, std::ios::trunc);
        if (!f) throw std::runtime_error("cannot write " + out);
        f << text;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"knowledge-graph embedding training and perturbation-robustness benchmark"};
    app.require_subcommand(1);

    TrainArgs ta;
    auto* train = app.add_subcommand("train", "train one model and evaluate the test split");
    train->add_option("--dataset", ta.dataset_dir, "dataset directory (train/valid/test.txt)")
        ->required();
    train->add_option("--dataset-name", ta.dataset_name, "name used in result rows");
    train->add_option("--model", ta.model, "distmult|complex|qmult|mure|keci")->required();
    train->add_option("--attack", ta.attack, "none|gp|lp|pp");
    train->add_option("--ratio", ta.ratio, "perturbation ratio k in [0,1]");
    train->add_option("--pp-mode", ta.pp_mode, "persistent|transient");
    train->add_option("--noise-low", ta.noise_low, "uniform noise lower bound");
    train->add_option("--noise-high", ta.noise_high, "uniform noise upper bound");
    train->add_option("--seed", ta.seed, "experiment seed");
    train->add_option("--epochs", ta.epochs, "training epochs");
    train->add_option("--lr", ta.lr, "learning rate");
    train->add_option("--batch-size", ta.batch_size, "mini-batch size");
    train->add_option("--dim", ta.dim, "embedding dimension (reals)");
    train->add_option("--optimizer", ta.optimizer, "adam|sgd");
    train->add_option("--keci-p", ta.keci_p, "Clifford p");
    train->add_option("--keci-q", ta.keci_q, "Clifford q");
    train->add_flag("--qmult-raw-relations", ta.qmult_raw_relations,
                    "skip QMult relation normalization");
    train->add_flag("--reciprocal", ta.reciprocal, "augment splits with inverse relations");
    train->add_option("--tie", ta.tie, "mean|optimistic|pessimistic rank ties");
    train->add_option("--out", ta.out_csv, "append result rows to this CSV");
    train->add_option("--checkpoint", ta.checkpoint_path, "write final parameters here");
    train->add_option("--rank-dump", ta.rank_dump, "write per-triple filtered ranks (TSV)");

    SweepArgs sa;
    auto* sweep = app.add_subcommand("sweep", "run an experiment grid into a results CSV");
    sweep->add_option("--config", sa.config_path, "config file ([sweep]/[train]/[attack])");
    sweep->add_option("--datasets", sa.datasets, "dataset names under the data root")->delimiter(',');
    sweep->add_option("--models", sa.models, "model list")->delimiter(',');
    sweep->add_option("--surfaces", sa.surfaces, "attack surfaces")->delimiter(',');
    sweep->add_option("--ratios", sa.ratios, "perturbation ratios")->delimiter(',');
    sweep->add_option("--seeds", sa.seeds, "seed list")->delimiter(',');
    sweep->add_option("--data-root", sa.data_root, "directory holding the dataset folders");
    sweep->add_option("--out", sa.out_csv, "results CSV path");
    sweep->add_flag("--share-baseline", sa.share_baseline,
                    "train ratio-0 cells once per (dataset, model, seed)");
    sweep->add_flag("--no-share-baseline", sa.no_share_baseline, "force per-surface baselines");
    sweep->add_option("--parallel", sa.parallel, "worker threads (0 = hardware)");
    sweep->add_option("--max-large-parallel", sa.max_large_parallel,
                      "cap on concurrent large-dataset cells");
    sweep->add_option("--epochs", sa.epochs, "training epochs");
    sweep->add_option("--lr", sa.lr, "learning rate");
    sweep->add_option("--batch-size", sa.batch_size, "mini-batch size");
    sweep->add_option("--dim", sa.dim, "embedding dimension (reals)");
    sweep->add_option("--optimizer", sa.optimizer, "adam|sgd");
    sweep->add_option("--keci-p", sa.keci_p, "Clifford p");
    sweep->add_option("--keci-q", sa.keci_q, "Clifford q");
    sweep->add_flag("--qmult-raw-relations", sa.qmult_raw_relations,
                    "skip QMult relation normalization");
    sweep->add_flag("--reciprocal", sa.reciprocal, "augment splits with inverse relations");
    sweep->add_option("--tie", sa.tie, "rank tie rule");
    sweep->add_option("--pp-mode", sa.pp_mode, "persistent|transient");
    auto* nl = sweep->add_option("--noise-low", sa.noise_low, "uniform noise lower bound");
    auto* nh = sweep->add_option("--noise-high", sa.noise_high, "uniform noise upper bound");
    nl->needs(nh);
    nh->needs(nl);

    std::string agg_in, agg_out = "-";
    auto* agg = app.add_subcommand("aggregate", "per-cell mean/std over seeds");
    agg->add_option("--in", agg_in, "results CSV")->required();
    agg->add_option("--out", agg_out, "output CSV ('-' = stdout)");

    std::string plot_in, plot_dir;
    kge::PlotOptions popts;
    auto* plot = app.add_subcommand("plot", "SVG figures, one per (dataset, surface)");
    plot->add_option("--in", plot_in, "results CSV")->required();
    plot->add_option("--out-dir", plot_dir, "output directory")->required();
    plot->add_option("--split", popts.split, "split to plot");
    plot->add_option("--mode", popts.mode, "raw|filtered");

    std::string stats_root = "data", stats_single, stats_out = "-";
    std::vector<std::string> stats_names = {"UMLS", "KINSHIP", "WN18RR", "NELL-995-h100",
                                            "FB15K-237"};
    auto* stats = app.add_subcommand("stats", "dataset statistics CSV");
    stats->add_option("--data-root", stats_root, "directory holding the dataset folders");
    stats->add_option("--datasets", stats_names, "dataset names")->delimiter(',');
    stats->add_option("--dataset", stats_single, "single dataset directory");
    stats->add_option("--out", stats_out, "output CSV ('-' = stdout)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (train->parsed()) return cmd_train(ta);
        if (sweep->parsed()) {
            sa.noise_set = nl->count() > 0;
            return cmd_sweep(sa);
        }
        if (agg->parsed()) return cmd_aggregate(agg_in, agg_out);
        if (plot->parsed()) return cmd_plot(plot_in, plot_dir, popts);
        if (stats->parsed()) return cmd_stats(stats_root, stats_names, stats_single, stats_out);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
