#pragma once

#include "kge/attack.hpp"
#include "kge/dataset.hpp"
#include "kge/kernels.hpp"
#include "kge/model.hpp"
#include "kge/optimizer.hpp"

namespace kge {

struct TrainConfig {
    ModelKind kind = ModelKind::DistMult;
    int dim = 32;
    int keci_p = 0;
    int keci_q = 1;
    bool qmult_normalize = true;
    double lr = 0.1;
    int epochs = 100;
    int batch_size = 1024;
    OptimizerKind optimizer = OptimizerKind::Adam;
    AttackConfig attack;
    std::uint64_t seed = 1;

    ModelConfig model_config(std::int32_t num_entities, std::int32_t num_relations) const;
    void validate() const;
};

struct TrainReport {
    std::vector<double> epoch_loss;  // dataset-weighted mean BCE per epoch
    double wall_seconds = 0.0;
};

// Runs the full epoch/batch loop. RNG sub-streams are derived from the seed
// per (purpose, epoch, batch), so the shuffle order is identical across attack
// surfaces and a GP/LP/PP run at ratio 0 is bit-identical to surface none.
Model train_model(const KnowledgeGraph& graph, const TrainConfig& cfg,
                  TrainReport* report = nullptr);

}  // namespace kge
