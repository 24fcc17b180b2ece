#include "kge/train.hpp"

#include <chrono>
#include <cmath>

namespace kge {

ModelConfig TrainConfig::model_config(std::int32_t num_entities,
                                      std::int32_t num_relations) const {
    ModelConfig mc;
    mc.kind = kind;
    mc.num_entities = num_entities;
    mc.num_relations = num_relations;
    mc.dim = dim;
    mc.keci_p = keci_p;
    mc.keci_q = keci_q;
    mc.qmult_normalize = qmult_normalize;
    return mc;
}

void TrainConfig::validate() const {
    if (lr <= 0.0) throw std::invalid_argument("lr must be positive");
    if (epochs <= 0) throw std::invalid_argument("epochs must be positive");
    if (batch_size <= 0) throw std::invalid_argument("batch_size must be positive");
    attack.validate();
}

Model train_model(const KnowledgeGraph& graph, const TrainConfig& cfg, TrainReport* report) {
    cfg.validate();
    const auto t0 = std::chrono::steady_clock::now();

    auto dataset = build_kvsall(graph.train, graph.vocab.num_entities());
    if (dataset.empty()) throw std::runtime_error("empty training split");

    ModelConfig mc = cfg.model_config(graph.vocab.num_entities(), graph.vocab.num_relations());
    Model model(mc);
    model.init(derive_seed(cfg.seed, "init"));

    Optimizer opt(OptimizerConfig{cfg.optimizer, cfg.lr, 0.9, 0.999, 1e-8}, mc);
    GradientBuffer grads;
    grads.init(mc);
    BatchWorkspace ws;

    if (report) {
        report->epoch_loss.clear();
        report->epoch_loss.reserve(static_cast<std::size_t>(cfg.epochs));
    }

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        Rng shuffle_rng(derive_seed(cfg.seed, "shuffle", static_cast<std::uint64_t>(epoch)));
        auto batches = make_epoch_batches(dataset, static_cast<std::size_t>(cfg.batch_size), epoch,
                                          shuffle_rng);
        double epoch_sum = 0.0;
        std::size_t epoch_examples = 0;

        for (auto& batch : batches) {
            Rng attack_rng(derive_seed(cfg.seed, "attack", static_cast<std::uint64_t>(epoch),
                                       static_cast<std::uint64_t>(batch.index)));
            RowBackup backup = apply_attack(cfg.attack, batch, model, attack_rng);

            grads.clear();
            double loss = kvsall_forward_backward(model, batch, grads, ws);
            if (cfg.attack.pp_mode == PpMode::Transient && !backup.empty()) {
                backup.restore(model);
            }
            if (!std::isfinite(loss)) {
                throw std::runtime_error("non-finite loss (model " +
                                         std::string(to_string(cfg.kind)) + ", epoch " +
                                         std::to_string(epoch + 1) + ", batch " +
                                         std::to_string(batch.index + 1) + ")");
            }
            opt.step(model, grads);

            epoch_sum += loss * static_cast<double>(batch.examples.size());
            epoch_examples += batch.examples.size();
        }
        if (report) {
            report->epoch_loss.push_back(epoch_sum / static_cast<double>(epoch_examples));
        }
    }

    if (report) {
        report->wall_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
    return model;
}

}  // namespace kge
