#include "kge/model.hpp"

#include <algorithm>
#include <bit>
#include <cstring>

namespace kge {

const char* to_string(ModelKind kind) {
    switch (kind) {
        case ModelKind::DistMult: return "distmult";
        case ModelKind::ComplEx: return "complex";
        case ModelKind::QMult: return "qmult";
        case ModelKind::MuRE: return "mure";
        case ModelKind::Keci: return "keci";
    }
    return "?";
}

ModelKind model_kind_from_string(std::string_view name) {
    if (name == "distmult") return ModelKind::DistMult;
    if (name == "complex") return ModelKind::ComplEx;
    if (name == "qmult") return ModelKind::QMult;
    if (name == "mure") return ModelKind::MuRE;
    if (name == "keci") return ModelKind::Keci;
    throw std::invalid_argument("unknown model: " + std::string(name));
}

CliffordTable CliffordTable::make(int p, int q) {
    if (p < 0 || q < 0 || p + q > 2) {
        throw std::invalid_argument("Clifford signature out of the supported range (p+q <= 2)");
    }
    CliffordTable t;
    t.p = p;
    t.q = q;
    t.adim = 1 << (p + q);
    // basis elements as generator bitmasks: bit g set means e_{g+1} present
    for (unsigned a = 0; a < static_cast<unsigned>(t.adim); ++a) {
        for (unsigned b = 0; b < static_cast<unsigned>(t.adim); ++b) {
            int sign = 1;
            unsigned acc = a;
            for (int g = 0; g < 2; ++g) {
                if (!(b & (1u << g))) continue;
                // carry e_{g+1} leftwards past the higher generators of acc
                if (std::popcount(acc >> (g + 1)) & 1) sign = -sign;
                if (acc & (1u << g)) {
                    if (g >= p) sign = -sign;  // e^2 = -1 in the q part
                    acc &= ~(1u << g);
                } else {
                    acc |= 1u << g;
                }
            }
            t.prod_sign[a][b] = sign;
            t.prod_idx[a][b] = static_cast<int>(acc);
        }
    }
    return t;
}

void ModelConfig::validate() const {
    if (num_entities <= 0 || num_relations <= 0) {
        throw std::invalid_argument("model needs positive entity/relation counts");
    }
    if (dim <= 0) throw std::invalid_argument("dim must be positive");
    if (kind == ModelKind::Keci && (keci_p < 0 || keci_q < 0 || keci_p + keci_q > 2)) {
        throw std::invalid_argument("keci supports p+q <= 2 only");
    }
    int a = algebra_dim();
    if (a > 0 && dim % a != 0) {
        throw std::invalid_argument(std::string(to_string(kind)) + " needs dim divisible by " +
                                    std::to_string(a));
    }
}

void GradientBuffer::init(const ModelConfig& cfg) {
    ent = Matrix(cfg.num_entities, cfg.entity_dim());
    rel = Matrix(cfg.num_relations, cfg.relation_dim());
    touched_rel.clear();
    rel_mark.assign(static_cast<std::size_t>(cfg.num_relations), 0);
}

void GradientBuffer::touch_rel(std::int32_t r) {
    if (!rel_mark[static_cast<std::size_t>(r)]) {
        rel_mark[static_cast<std::size_t>(r)] = 1;
        touched_rel.push_back(r);
    }
}

void GradientBuffer::finish() { std::sort(touched_rel.begin(), touched_rel.end()); }

void GradientBuffer::clear() {
    ent.zero();
    for (auto r : touched_rel) {
        std::memset(rel.row(r), 0, sizeof(double) * static_cast<std::size_t>(rel.cols));
        rel_mark[static_cast<std::size_t>(r)] = 0;
    }
    touched_rel.clear();
}

Model::Model(const ModelConfig& c) : cfg(c) {
    cfg.validate();
    ent = Matrix(cfg.num_entities, cfg.entity_dim());
    rel = Matrix(cfg.num_relations, cfg.relation_dim());
}

void Model::init(std::uint64_t seed) {
    Rng rng(seed);
    for (auto& x : ent.a) x = rng.uniform(-0.1, 0.1);
    for (auto& x : rel.a) x = rng.uniform(-0.1, 0.1);
    if (cfg.kind == ModelKind::MuRE) {
        for (std::int64_t e = 0; e < ent.rows; ++e) ent.row(e)[cfg.dim] = 0.0;
    }
}

namespace {

// quaternion helpers; components (w, x, y, z)
inline void hamilton(const double* a, const double* b, double* out) {
    out[0] = a[0] * b[0] - a[1] * b[1] - a[2] * b[2] - a[3] * b[3];
    out[1] = a[0] * b[1] + a[1] * b[0] + a[2] * b[3] - a[3] * b[2];
    out[2] = a[0] * b[2] - a[1] * b[3] + a[2] * b[0] + a[3] * b[1];
    out[3] = a[0] * b[3] + a[1] * b[2] - a[2] * b[1] + a[3] * b[0];
}

inline void conjq(const double* a, double* out) {
    out[0] = a[0];
    out[1] = -a[1];
    out[2] = -a[2];
    out[3] = -a[3];
}

constexpr double kNormFloor = 1e-12;

// loads quaternion j of a component-major row into q[4]
inline void load_quat(const double* row, int blocks, int j, double* out) {
    for (int c = 0; c < 4; ++c) out[c] = row[c * blocks + j];
}

inline void store_add_quat(double* row, int blocks, int j, const double* v) {
    for (int c = 0; c < 4; ++c) row[c * blocks + j] += v[c];
}

}  // namespace

double Model::score(std::int32_t h, std::int32_t r, std::int32_t t) const {
    const double* eh = ent.row(h);
    const double* er = rel.row(r);
    const double* et = ent.row(t);
    const int d = cfg.dim;

    switch (cfg.kind) {
        case ModelKind::DistMult: {
            double s = 0.0;
            for (int i = 0; i < d; ++i) s += eh[i] * er[i] * et[i];
            return s;
        }
        case ModelKind::ComplEx: {
            const int b = d / 2;
            double s = 0.0;
            for (int j = 0; j < b; ++j) {
                double ah = eh[j], bh = eh[b + j];
                double ar = er[j], br = er[b + j];
                double at = et[j], bt = et[b + j];
                s += (ah * ar - bh * br) * at + (ah * br + bh * ar) * bt;
            }
            return s;
        }
        case ModelKind::QMult: {
            const int b = d / 4;
            double s = 0.0;
            for (int j = 0; j < b; ++j) {
                double qh[4], qr[4], qt[4], u[4];
                load_quat(eh, b, j, qh);
                load_quat(er, b, j, qr);
                load_quat(et, b, j, qt);
                if (cfg.qmult_normalize) {
                    double n = std::max(
                        std::sqrt(qr[0] * qr[0] + qr[1] * qr[1] + qr[2] * qr[2] + qr[3] * qr[3]),
                        kNormFloor);
                    for (double& c : qr) c /= n;
                }
                hamilton(qh, qr, u);
                s += u[0] * qt[0] + u[1] * qt[1] + u[2] * qt[2] + u[3] * qt[3];
            }
            return s;
        }
        case ModelKind::MuRE: {
            const double* rho = er;
            const double* tau = er + d;
            double s = 0.0;
            for (int i = 0; i < d; ++i) {
                double diff = rho[i] * eh[i] - (et[i] + tau[i]);
                s -= diff * diff;
            }
            return s + eh[d] + et[d];
        }
        case ModelKind::Keci: {
            const CliffordTable tab = CliffordTable::make(cfg.keci_p, cfg.keci_q);
            const int A = tab.adim;
            const int b = d / A;
            double s = 0.0;
            for (int j = 0; j < b; ++j) {
                for (int ca = 0; ca < A; ++ca) {
                    for (int cb = 0; cb < A; ++cb) {
                        s += tab.prod_sign[ca][cb] * eh[ca * b + j] * er[cb * b + j] *
                             et[tab.prod_idx[ca][cb] * b + j];
                    }
                }
            }
            return s;
        }
    }
    return 0.0;
}

void Model::score_grad(std::int32_t h, std::int32_t r, std::int32_t t, double* gh, double* gr,
                       double* gt) const {
    const double* eh = ent.row(h);
    const double* er = rel.row(r);
    const double* et = ent.row(t);
    const int d = cfg.dim;
    std::fill(gh, gh + cfg.entity_dim(), 0.0);
    std::fill(gr, gr + cfg.relation_dim(), 0.0);
    std::fill(gt, gt + cfg.entity_dim(), 0.0);

    switch (cfg.kind) {
        case ModelKind::DistMult: {
            for (int i = 0; i < d; ++i) {
                gh[i] = er[i] * et[i];
                gr[i] = eh[i] * et[i];
                gt[i] = eh[i] * er[i];
            }
            return;
        }
        case ModelKind::ComplEx: {
            const int b = d / 2;
            for (int j = 0; j < b; ++j) {
                double ah = eh[j], bh = eh[b + j];
                double ar = er[j], br = er[b + j];
                double at = et[j], bt = et[b + j];
                gh[j] = ar * at + br * bt;
                gh[b + j] = -br * at + ar * bt;
                gr[j] = ah * at + bh * bt;
                gr[b + j] = -bh * at + ah * bt;
                gt[j] = ah * ar - bh * br;
                gt[b + j] = ah * br + bh * ar;
            }
            return;
        }
        case ModelKind::QMult: {
            const int b = d / 4;
            for (int j = 0; j < b; ++j) {
                double qh[4], qraw[4], qr[4], qt[4];
                load_quat(eh, b, j, qh);
                load_quat(er, b, j, qraw);
                load_quat(et, b, j, qt);
                double n = 1.0;
                if (cfg.qmult_normalize) {
                    n = std::max(std::sqrt(qraw[0] * qraw[0] + qraw[1] * qraw[1] +
                                           qraw[2] * qraw[2] + qraw[3] * qraw[3]),
                                 kNormFloor);
                }
                for (int c = 0; c < 4; ++c) qr[c] = qraw[c] / n;

                // phi = <h x r, t>  =>  dh = t x r*, dr = h* x t, dt = h x r
                double rc[4], hc[4], dh[4], du[4], u[4];
                conjq(qr, rc);
                conjq(qh, hc);
                hamilton(qt, rc, dh);
                hamilton(hc, qt, du);
                hamilton(qh, qr, u);
                store_add_quat(gh, b, j, dh);
                store_add_quat(gt, b, j, u);
                if (cfg.qmult_normalize) {
                    // through the unit normalization: (du - <du,u>u) / n
                    double dot = du[0] * qr[0] + du[1] * qr[1] + du[2] * qr[2] + du[3] * qr[3];
                    double dr[4];
                    for (int c = 0; c < 4; ++c) dr[c] = (du[c] - dot * qr[c]) / n;
                    store_add_quat(gr, b, j, dr);
                } else {
                    store_add_quat(gr, b, j, du);
                }
            }
            return;
        }
        case ModelKind::MuRE: {
            const double* rho = er;
            const double* tau = er + d;
            for (int i = 0; i < d; ++i) {
                double diff = rho[i] * eh[i] - (et[i] + tau[i]);
                gh[i] = -2.0 * diff * rho[i];
                gt[i] = 2.0 * diff;
                gr[i] = -2.0 * diff * eh[i];
                gr[d + i] = 2.0 * diff;
            }
            gh[d] = 1.0;
            gt[d] = 1.0;
            return;
        }
        case ModelKind::Keci: {
            const CliffordTable tab = CliffordTable::make(cfg.keci_p, cfg.keci_q);
            const int A = tab.adim;
            const int b = d / A;
            for (int j = 0; j < b; ++j) {
                for (int ca = 0; ca < A; ++ca) {
                    for (int cb = 0; cb < A; ++cb) {
                        double sg = tab.prod_sign[ca][cb];
                        int ci = tab.prod_idx[ca][cb];
                        gh[ca * b + j] += sg * er[cb * b + j] * et[ci * b + j];
                        gr[cb * b + j] += sg * eh[ca * b + j] * et[ci * b + j];
                        gt[ci * b + j] += sg * eh[ca * b + j] * er[cb * b + j];
                    }
                }
            }
            return;
        }
    }
}

double kvsall_reference(const Model& model, const MiniBatch& batch, GradientBuffer& grads) {
    const std::int32_t ne = model.cfg.num_entities;
    const std::size_t m = batch.examples.size();
    if (m == 0) throw std::invalid_argument("empty batch");
    const double scale = 1.0 / (static_cast<double>(m) * static_cast<double>(ne));

    std::vector<double> gh(static_cast<std::size_t>(model.cfg.entity_dim()));
    std::vector<double> gr(static_cast<std::size_t>(model.cfg.relation_dim()));
    std::vector<double> gt(static_cast<std::size_t>(model.cfg.entity_dim()));

    double loss = 0.0;
    for (const auto& ex : batch.examples) {
        grads.touch_rel(ex.rel);
        for (std::int32_t e = 0; e < ne; ++e) {
            double x = model.score(ex.head, ex.rel, e);
            double y = ex.label(e) ? 1.0 : 0.0;
            loss += bce_with_logit(x, y);
            double g = (sigmoid(x) - y) * scale;

            model.score_grad(ex.head, ex.rel, e, gh.data(), gr.data(), gt.data());
            double* eh = grads.ent.row(ex.head);
            double* er = grads.rel.row(ex.rel);
            double* et = grads.ent.row(e);
            for (int i = 0; i < grads.ent.cols; ++i) eh[i] += g * gh[i];
            for (int i = 0; i < grads.rel.cols; ++i) er[i] += g * gr[i];
            for (int i = 0; i < grads.ent.cols; ++i) et[i] += g * gt[i];
        }
    }
    grads.finish();
    return loss * scale;
}

}  // namespace kge
