#include "kge/optimizer.hpp"

#include <cmath>

namespace kge {

const char* to_string(OptimizerKind kind) {
    return kind == OptimizerKind::Adam ? "adam" : "sgd";
}

OptimizerKind optimizer_from_string(std::string_view name) {
    if (name == "adam") return OptimizerKind::Adam;
    if (name == "sgd") return OptimizerKind::Sgd;
    throw std::invalid_argument("unknown optimizer: " + std::string(name));
}

Optimizer::Optimizer(const OptimizerConfig& cfg, const ModelConfig& shapes) : cfg_(cfg) {
    if (cfg_.kind == OptimizerKind::Adam) {
        ent_m_ = Matrix(shapes.num_entities, shapes.entity_dim());
        ent_v_ = Matrix(shapes.num_entities, shapes.entity_dim());
        rel_m_ = Matrix(shapes.num_relations, shapes.relation_dim());
        rel_v_ = Matrix(shapes.num_relations, shapes.relation_dim());
    }
    ent_t_.assign(static_cast<std::size_t>(shapes.num_entities), 0);
    rel_t_.assign(static_cast<std::size_t>(shapes.num_relations), 0);
}

void Optimizer::adam_row(double* theta, const double* g, double* m, double* v, std::int64_t t,
                         int n) {
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t));
    for (int k = 0; k < n; ++k) {
        m[k] = cfg_.beta1 * m[k] + (1.0 - cfg_.beta1) * g[k];
        v[k] = cfg_.beta2 * v[k] + (1.0 - cfg_.beta2) * g[k] * g[k];
        theta[k] -= cfg_.lr * (m[k] / bc1) / (std::sqrt(v[k] / bc2) + cfg_.eps);
    }
}

void Optimizer::step(Model& model, const GradientBuffer& grads) {
    const int ecols = model.ent.cols;
    const int rcols = model.rel.cols;

    if (cfg_.kind == OptimizerKind::Sgd) {
#pragma omp parallel for schedule(static)
        for (std::int64_t e = 0; e < model.ent.rows; ++e) {
            double* th = model.ent.row(e);
            const double* g = grads.ent.row(e);
            for (int k = 0; k < ecols; ++k) th[k] -= cfg_.lr * g[k];
            ++ent_t_[static_cast<std::size_t>(e)];
        }
        for (auto r : grads.touched_rel) {
            double* th = model.rel.row(r);
            const double* g = grads.rel.row(r);
            for (int k = 0; k < rcols; ++k) th[k] -= cfg_.lr * g[k];
            ++rel_t_[static_cast<std::size_t>(r)];
        }
        return;
    }

#pragma omp parallel for schedule(static)
    for (std::int64_t e = 0; e < model.ent.rows; ++e) {
        const auto t = ++ent_t_[static_cast<std::size_t>(e)];
        adam_row(model.ent.row(e), grads.ent.row(e), ent_m_.row(e), ent_v_.row(e), t, ecols);
    }
    for (auto r : grads.touched_rel) {
        const auto t = ++rel_t_[static_cast<std::size_t>(r)];
        adam_row(model.rel.row(r), grads.rel.row(r), rel_m_.row(r), rel_v_.row(r), t, rcols);
    }
}

}  // namespace kge
