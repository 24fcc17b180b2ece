#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "kge/dataset.hpp"
#include "kge/rng.hpp"

namespace kge {

enum class ModelKind { DistMult, ComplEx, QMult, MuRE, Keci };

const char* to_string(ModelKind kind);
ModelKind model_kind_from_string(std::string_view name);

// Multiplication table of the real Clifford algebra Cl(p,q) with p+q <= 2.
// Basis order: [1, e1, e2, e1e2]; e_i^2 = +1 for i <= p, -1 otherwise.
// prod_sign/prod_idx encode e_a * e_b = sign * e_idx.
struct CliffordTable {
    int p = 0;
    int q = 0;
    int adim = 1;  // 1 << (p+q)
    int prod_sign[4][4] = {};
    int prod_idx[4][4] = {};

    static CliffordTable make(int p, int q);
};

struct ModelConfig {
    ModelKind kind = ModelKind::DistMult;
    std::int32_t num_entities = 0;
    std::int32_t num_relations = 0;
    int dim = 32;  // real parameter budget of the embedding vector proper
    int keci_p = 0;
    int keci_q = 1;
    bool qmult_normalize = true;

    // number of coefficients per hypercomplex component (1 for plain real)
    int algebra_dim() const {
        switch (kind) {
            case ModelKind::ComplEx: return 2;
            case ModelKind::QMult: return 4;
            case ModelKind::Keci: return 1 << (keci_p + keci_q);
            default: return 1;
        }
    }
    int blocks() const { return dim / algebra_dim(); }
    // MuRE carries one bias scalar per entity on top of the 32-vector
    int entity_dim() const { return kind == ModelKind::MuRE ? dim + 1 : dim; }
    // MuRE relations are a scaling half and a translation half
    int relation_dim() const { return kind == ModelKind::MuRE ? 2 * dim : dim; }

    void validate() const;
};

struct Matrix {
    std::int64_t rows = 0;
    int cols = 0;
    std::vector<double> a;

    Matrix() = default;
    Matrix(std::int64_t r, int c) : rows(r), cols(c), a(static_cast<std::size_t>(r) * c, 0.0) {}

    double* row(std::int64_t i) { return a.data() + i * cols; }
    const double* row(std::int64_t i) const { return a.data() + i * cols; }
    void zero() { std::fill(a.begin(), a.end(), 0.0); }
};

// Dense entity accumulator (every entity is a candidate tail in KvsAll, so
// every entity row receives gradient) plus sparsely touched relation rows.
struct GradientBuffer {
    Matrix ent;
    Matrix rel;
    std::vector<std::int32_t> touched_rel;  // sorted, unique
    std::vector<std::uint8_t> rel_mark;

    void init(const ModelConfig& cfg);
    void touch_rel(std::int32_t r);
    void finish();  // sorts the touched list
    void clear();   // zeroes ent fully and only the touched rel rows
};

struct Model {
    ModelConfig cfg;
    Matrix ent;  // num_entities x entity_dim
    Matrix rel;  // num_relations x relation_dim

    Model() = default;
    explicit Model(const ModelConfig& c);

    // i.i.d. uniform [-0.1, 0.1]; MuRE entity biases start at zero
    void init(std::uint64_t seed);

    // Single-triple scoring with explicit per-model arithmetic. This is the
    // slow reference path; batched scoring lives in kernels.hpp.
    double score(std::int32_t h, std::int32_t r, std::int32_t t) const;

    // dphi/dh, dphi/dr, dphi/dt for one triple, written into caller buffers of
    // entity_dim/relation_dim/entity_dim width (buffers are overwritten).
    void score_grad(std::int32_t h, std::int32_t r, std::int32_t t, double* gh, double* gr,
                    double* gt) const;
};

inline double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    double e = std::exp(x);
    return e / (1.0 + e);
}

// binary cross entropy from the logit, stable for any finite x
inline double bce_with_logit(double x, double y) {
    return std::max(x, 0.0) - x * y + std::log1p(std::exp(-std::abs(x)));
}

// Single-threaded KvsAll loss/gradient built from score()/score_grad() only.
// Exists to cross-check the batched kernels; O(m * |E|) scoring calls.
double kvsall_reference(const Model& model, const MiniBatch& batch, GradientBuffer& grads);

}  // namespace kge
