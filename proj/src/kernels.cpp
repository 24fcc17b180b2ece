#include "kge/kernels.hpp"

#include <algorithm>
#include <cmath>

namespace kge {

namespace {

CliffordTable table_for(const ModelConfig& cfg) {
    switch (cfg.kind) {
        case ModelKind::DistMult: return CliffordTable::make(0, 0);
        case ModelKind::ComplEx: return CliffordTable::make(0, 1);
        case ModelKind::QMult: return CliffordTable::make(0, 2);
        case ModelKind::Keci: return CliffordTable::make(cfg.keci_p, cfg.keci_q);
        default: throw std::logic_error("no multiplication table for this model");
    }
}

constexpr double kNormFloor = 1e-12;

// relation row with QMult's per-quaternion unit normalization applied (other
// models pass through unchanged); buf must hold dim doubles
const double* effective_relation(const Model& m, std::int32_t r, double* buf) {
    const double* raw = m.rel.row(r);
    if (m.cfg.kind != ModelKind::QMult || !m.cfg.qmult_normalize) return raw;
    const int b = m.cfg.dim / 4;
    for (int j = 0; j < b; ++j) {
        double n = 0.0;
        for (int c = 0; c < 4; ++c) n += raw[c * b + j] * raw[c * b + j];
        n = std::max(std::sqrt(n), kNormFloor);
        for (int c = 0; c < 4; ++c) buf[c * b + j] = raw[c * b + j] / n;
    }
    return buf;
}

// q(h,r) with phi(h,r,t) = <q, t> coefficientwise, via the algebra table
void build_query(const CliffordTable& tab, int dim, const double* h, const double* r, double* q) {
    const int A = tab.adim;
    const int B = dim / A;
    std::fill(q, q + dim, 0.0);
    for (int ca = 0; ca < A; ++ca) {
        for (int cb = 0; cb < A; ++cb) {
            const double sg = tab.prod_sign[ca][cb];
            double* out = q + tab.prod_idx[ca][cb] * B;
            const double* ha = h + ca * B;
            const double* rb = r + cb * B;
            for (int j = 0; j < B; ++j) out[j] += sg * ha[j] * rb[j];
        }
    }
}

// adjoint of build_query: distributes gq onto the head row and the effective
// relation; gh/gr are accumulated into
void query_grad(const CliffordTable& tab, int dim, const double* h, const double* r,
                const double* gq, double* gh, double* gr) {
    const int A = tab.adim;
    const int B = dim / A;
    for (int ca = 0; ca < A; ++ca) {
        for (int cb = 0; cb < A; ++cb) {
            const double sg = tab.prod_sign[ca][cb];
            const double* g = gq + tab.prod_idx[ca][cb] * B;
            const double* ha = h + ca * B;
            const double* rb = r + cb * B;
            double* oh = gh + ca * B;
            double* orr = gr + cb * B;
            for (int j = 0; j < B; ++j) {
                oh[j] += sg * rb[j] * g[j];
                orr[j] += sg * ha[j] * g[j];
            }
        }
    }
}

// chain rule of the per-quaternion unit normalization: g_eff is the gradient
// w.r.t. the normalized relation, accumulated into the raw-row gradient
void qmult_norm_backward(const Model& m, std::int32_t r, const double* g_eff, double* g_raw) {
    const double* raw = m.rel.row(r);
    const int b = m.cfg.dim / 4;
    for (int j = 0; j < b; ++j) {
        double n = 0.0;
        for (int c = 0; c < 4; ++c) n += raw[c * b + j] * raw[c * b + j];
        n = std::max(std::sqrt(n), kNormFloor);
        double u[4], g[4], dot = 0.0;
        for (int c = 0; c < 4; ++c) {
            u[c] = raw[c * b + j] / n;
            g[c] = g_eff[c * b + j];
            dot += g[c] * u[c];
        }
        for (int c = 0; c < 4; ++c) g_raw[c * b + j] += (g[c] - dot * u[c]) / n;
    }
}

inline double dot(const double* a, const double* b, int n) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += a[i] * b[i];
    return s;
}

// per-row loss evaluation and (optionally) in-place conversion of logits into
// scaled dL/dlogit; returns the row's summed BCE
double row_loss_and_grad(const KvsAllExample& ex, double* row, std::int32_t ne, double scale,
                         bool write_grad, double* rowsum_out) {
    const double base_y = ex.inverted ? 1.0 : 0.0;
    // the entries off the tails list all carry label base_y; tails carry the
    // opposite, which shifts the loss by -+x and the gradient by -+1
    double loss = 0.0;
    for (auto t : ex.tails) loss += ex.inverted ? row[t] : -row[t];
    double rs = 0.0;
    if (write_grad) {
        for (std::int32_t e = 0; e < ne; ++e) {
            double x = row[e];
            loss += bce_with_logit(x, base_y);
            double g = (sigmoid(x) - base_y) * scale;
            row[e] = g;
            rs += g;
        }
        const double corr = ex.inverted ? scale : -scale;
        for (auto t : ex.tails) {
            row[t] += corr;
            rs += corr;
        }
    } else {
        for (std::int32_t e = 0; e < ne; ++e) loss += bce_with_logit(row[e], base_y);
    }
    if (rowsum_out) *rowsum_out = rs;
    return loss;
}

struct ForwardCtx {
    const Model* model;
    const MiniBatch* batch;
    BatchWorkspace* ws;
    CliffordTable tab;
    std::int32_t ne = 0;
    int m = 0;
    int d = 0;
    bool mure = false;
    double scale = 0.0;
};

ForwardCtx make_ctx(const Model& model, const MiniBatch& batch, BatchWorkspace& ws) {
    if (batch.examples.empty()) throw std::invalid_argument("empty batch");
    ForwardCtx c;
    c.model = &model;
    c.batch = &batch;
    c.ws = &ws;
    c.ne = model.cfg.num_entities;
    c.m = static_cast<int>(batch.examples.size());
    c.d = model.cfg.dim;
    c.mure = model.cfg.kind == ModelKind::MuRE;
    if (!c.mure) c.tab = table_for(model.cfg);
    c.scale = 1.0 / (static_cast<double>(c.m) * static_cast<double>(c.ne));
    ws.ensure(batch.examples.size(), c.ne, c.d);
    return c;
}

// fills ws.queries (and the MuRE norm caches), then ws.logits
void forward_logits(ForwardCtx& c) {
    const Model& model = *c.model;
    BatchWorkspace& ws = *c.ws;
    const auto& ex = c.batch->examples;

#pragma omp parallel for schedule(static)
    for (int i = 0; i < c.m; ++i) {
        double* q = ws.queries.row(i);
        if (c.mure) {
            const double* h = model.ent.row(ex[static_cast<std::size_t>(i)].head);
            const double* r = model.rel.row(ex[static_cast<std::size_t>(i)].rel);
            double sq = 0.0;
            for (int k = 0; k < c.d; ++k) {
                q[k] = r[k] * h[k] - r[c.d + k];
                sq += q[k] * q[k];
            }
            ws.vsq[static_cast<std::size_t>(i)] = sq;
        } else {
            double rbuf[64];
            std::vector<double> rbig;
            double* rb = rbuf;
            if (c.d > 64) {
                rbig.resize(static_cast<std::size_t>(c.d));
                rb = rbig.data();
            }
            const double* r = effective_relation(model, ex[static_cast<std::size_t>(i)].rel, rb);
            build_query(c.tab, c.d, model.ent.row(ex[static_cast<std::size_t>(i)].head), r, q);
        }
    }

    if (c.mure) {
#pragma omp parallel for schedule(static)
        for (std::int32_t e = 0; e < c.ne; ++e) {
            ws.ent_sq[static_cast<std::size_t>(e)] = dot(model.ent.row(e), model.ent.row(e), c.d);
        }
    }

#pragma omp parallel for schedule(static)
    for (int i = 0; i < c.m; ++i) {
        double* row = ws.logits.row(i);
        const double* q = ws.queries.row(i);
        if (c.mure) {
            const auto& e0 = ex[static_cast<std::size_t>(i)];
            const double bh = model.ent.row(e0.head)[c.d];
            const double vq = ws.vsq[static_cast<std::size_t>(i)];
            for (std::int32_t e = 0; e < c.ne; ++e) {
                const double* t = model.ent.row(e);
                row[e] = -vq + 2.0 * dot(q, t, c.d) - ws.ent_sq[static_cast<std::size_t>(e)] + bh +
                         t[c.d];
            }
        } else {
            for (std::int32_t e = 0; e < c.ne; ++e) row[e] = dot(q, model.ent.row(e), c.d);
        }
    }
}

}  // namespace

void BatchWorkspace::ensure(std::size_t m, std::int32_t num_entities, int dim) {
    const auto mi = static_cast<std::int64_t>(m);
    if (queries.rows < mi || queries.cols != dim) queries = Matrix(mi, dim);
    if (logits.rows < mi || logits.cols != num_entities) logits = Matrix(mi, num_entities);
    if (grad_queries.rows < mi || grad_queries.cols != dim) grad_queries = Matrix(mi, dim);
    if (exloss.size() < m) exloss.resize(m);
    if (rowsum.size() < m) rowsum.resize(m);
    if (vsq.size() < m) vsq.resize(m);
    if (ent_sq.size() < static_cast<std::size_t>(num_entities)) {
        ent_sq.resize(static_cast<std::size_t>(num_entities));
    }
}

double kvsall_forward(const Model& model, const MiniBatch& batch, BatchWorkspace& ws) {
    ForwardCtx c = make_ctx(model, batch, ws);
    forward_logits(c);

#pragma omp parallel for schedule(static)
    for (int i = 0; i < c.m; ++i) {
        ws.exloss[static_cast<std::size_t>(i)] = row_loss_and_grad(
            batch.examples[static_cast<std::size_t>(i)], ws.logits.row(i), c.ne, c.scale,
            /*write_grad=*/false, nullptr);
    }
    double total = 0.0;
    for (int i = 0; i < c.m; ++i) total += ws.exloss[static_cast<std::size_t>(i)];
    return total * c.scale;
}

double kvsall_forward_backward(const Model& model, const MiniBatch& batch, GradientBuffer& grads,
                               BatchWorkspace& ws) {
    ForwardCtx c = make_ctx(model, batch, ws);
    forward_logits(c);
    const auto& ex = batch.examples;

    // logits -> scaled dL/dlogit in place, with per-example loss partials
#pragma omp parallel for schedule(static)
    for (int i = 0; i < c.m; ++i) {
        ws.exloss[static_cast<std::size_t>(i)] =
            row_loss_and_grad(ex[static_cast<std::size_t>(i)], ws.logits.row(i), c.ne, c.scale,
                              /*write_grad=*/true, &ws.rowsum[static_cast<std::size_t>(i)]);
    }
    double total = 0.0;
    for (int i = 0; i < c.m; ++i) total += ws.exloss[static_cast<std::size_t>(i)];

    // gradient w.r.t. each example's query (MuRE: w.r.t. v)
#pragma omp parallel for schedule(static)
    for (int i = 0; i < c.m; ++i) {
        const double* g = ws.logits.row(i);
        double* gq = ws.grad_queries.row(i);
        std::fill(gq, gq + c.d, 0.0);
        for (std::int32_t e = 0; e < c.ne; ++e) {
            const double ge = g[e];
            const double* t = c.model->ent.row(e);
            for (int k = 0; k < c.d; ++k) gq[k] += ge * t[k];
        }
        if (c.mure) {
            const double rs = ws.rowsum[static_cast<std::size_t>(i)];
            const double* v = ws.queries.row(i);
            for (int k = 0; k < c.d; ++k) gq[k] = 2.0 * (gq[k] - rs * v[k]);
        }
    }

    // tail-side entity gradients, one thread per entity column
#pragma omp parallel for schedule(static)
    for (std::int32_t e = 0; e < c.ne; ++e) {
        double* out = grads.ent.row(e);
        if (c.mure) {
            double acc[64];
            std::vector<double> accbig;
            double* a = acc;
            if (c.d > 64) {
                accbig.assign(static_cast<std::size_t>(c.d), 0.0);
                a = accbig.data();
            } else {
                std::fill(a, a + c.d, 0.0);
            }
            double gsum = 0.0;
            for (int i = 0; i < c.m; ++i) {
                const double ge = ws.logits.row(i)[e];
                const double* v = ws.queries.row(i);
                for (int k = 0; k < c.d; ++k) a[k] += ge * v[k];
                gsum += ge;
            }
            const double* t = model.ent.row(e);
            for (int k = 0; k < c.d; ++k) out[k] += 2.0 * (a[k] - gsum * t[k]);
            out[c.d] += gsum;
        } else {
            for (int i = 0; i < c.m; ++i) {
                const double ge = ws.logits.row(i)[e];
                const double* q = ws.queries.row(i);
                for (int k = 0; k < c.d; ++k) out[k] += ge * q[k];
            }
        }
    }

    // head and relation gradients, serial scatter
    std::vector<double> rbuf(static_cast<std::size_t>(c.d));
    std::vector<double> geff(static_cast<std::size_t>(c.d));
    for (int i = 0; i < c.m; ++i) {
        const auto& e0 = ex[static_cast<std::size_t>(i)];
        const double* gq = ws.grad_queries.row(i);
        double* gh = grads.ent.row(e0.head);
        double* gr = grads.rel.row(e0.rel);
        grads.touch_rel(e0.rel);
        if (c.mure) {
            const double* h = model.ent.row(e0.head);
            const double* r = model.rel.row(e0.rel);
            for (int k = 0; k < c.d; ++k) {
                gh[k] += gq[k] * r[k];        // d v / d h = rho
                gr[k] += gq[k] * h[k];        // d v / d rho = h
                gr[c.d + k] -= gq[k];         // d v / d tau = -1
            }
            gh[c.d] += ws.rowsum[static_cast<std::size_t>(i)];
        } else if (model.cfg.kind == ModelKind::QMult && model.cfg.qmult_normalize) {
            const double* r = effective_relation(model, e0.rel, rbuf.data());
            std::fill(geff.begin(), geff.end(), 0.0);
            query_grad(c.tab, c.d, model.ent.row(e0.head), r, gq, gh, geff.data());
            qmult_norm_backward(model, e0.rel, geff.data(), gr);
        } else {
            query_grad(c.tab, c.d, model.ent.row(e0.head), model.rel.row(e0.rel), gq, gh, gr);
        }
    }
    grads.finish();
    return total * c.scale;
}

void score_tails(const Model& model, std::int32_t h, std::int32_t r, double* out) {
    const int d = model.cfg.dim;
    const std::int32_t ne = model.cfg.num_entities;
    thread_local std::vector<double> q;
    q.resize(static_cast<std::size_t>(2 * d));

    if (model.cfg.kind == ModelKind::MuRE) {
        const double* eh = model.ent.row(h);
        const double* er = model.rel.row(r);
        double* v = q.data();
        double vq = 0.0;
        for (int k = 0; k < d; ++k) {
            v[k] = er[k] * eh[k] - er[d + k];
            vq += v[k] * v[k];
        }
        const double bh = eh[d];
        for (std::int32_t e = 0; e < ne; ++e) {
            const double* t = model.ent.row(e);
            out[e] = -vq + 2.0 * dot(v, t, d) - dot(t, t, d) + bh + t[d];
        }
        return;
    }

    const CliffordTable tab = table_for(model.cfg);
    const double* er = effective_relation(model, r, q.data() + d);
    build_query(tab, d, model.ent.row(h), er, q.data());
    for (std::int32_t e = 0; e < ne; ++e) out[e] = dot(q.data(), model.ent.row(e), d);
}

}  // namespace kge
