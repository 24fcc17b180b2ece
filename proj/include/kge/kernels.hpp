#pragma once

#include "kge/dataset.hpp"
#include "kge/model.hpp"

namespace kge {

// Reusable per-batch scratch. Buffers grow on demand and are never shrunk.
struct BatchWorkspace {
    Matrix queries;               // m x dim (MuRE: the translated product v)
    Matrix logits;                // m x |E|; holds dL/dlogit after the backward pass
    Matrix grad_queries;          // m x dim
    std::vector<double> exloss;   // per-example loss partial
    std::vector<double> rowsum;   // per-example sum of dL/dlogit
    std::vector<double> vsq;      // MuRE: per-example |v|^2
    std::vector<double> ent_sq;   // MuRE: per-entity |t|^2

    void ensure(std::size_t m, std::int32_t num_entities, int dim);
};

// Mean BCE of one KvsAll batch (forward only; used by finite differencing).
double kvsall_forward(const Model& model, const MiniBatch& batch, BatchWorkspace& ws);

// Forward + backward: returns the loss and accumulates dL/dparams into grads
// (caller clears the buffer between steps). Parallel over examples/entity
// columns with fixed serial reduction orders, so results do not depend on the
// thread count.
double kvsall_forward_backward(const Model& model, const MiniBatch& batch, GradientBuffer& grads,
                               BatchWorkspace& ws);

// Scores of (h, r, e) for every entity e, written to out[0..|E|).
void score_tails(const Model& model, std::int32_t h, std::int32_t r, double* out);

}  // namespace kge
