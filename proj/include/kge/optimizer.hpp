#pragma once

#include <string_view>

#include "kge/model.hpp"

namespace kge {

enum class OptimizerKind { Adam, Sgd };

const char* to_string(OptimizerKind kind);
OptimizerKind optimizer_from_string(std::string_view name);

struct OptimizerConfig {
    OptimizerKind kind = OptimizerKind::Adam;
    double lr = 0.1;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// Row-sparse optimizer: every entity row is updated each step (KvsAll tail
// gradients are dense), relation rows only when the batch touched them. Adam
// moments and bias-correction step counters are kept per row.
class Optimizer {
public:
    Optimizer(const OptimizerConfig& cfg, const ModelConfig& shapes);

    void step(Model& model, const GradientBuffer& grads);

    const OptimizerConfig& config() const { return cfg_; }
    std::int64_t relation_steps(std::int32_t r) const {
        return rel_t_[static_cast<std::size_t>(r)];
    }
    std::int64_t entity_steps(std::int32_t e) const { return ent_t_[static_cast<std::size_t>(e)]; }

private:
    void adam_row(double* theta, const double* g, double* m, double* v, std::int64_t t, int n);

    OptimizerConfig cfg_;
    Matrix ent_m_, ent_v_, rel_m_, rel_v_;
    std::vector<std::int64_t> ent_t_, rel_t_;
};

}  // namespace kge
