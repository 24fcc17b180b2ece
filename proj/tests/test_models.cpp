#include <doctest.h>

#include <cmath>
#include <vector>

#include "kge/kernels.hpp"
#include "kge/model.hpp"
#include "synthetic.hpp"

using namespace kge;

namespace {

ModelConfig make_cfg(ModelKind kind, std::int32_t ne, std::int32_t nr, int dim, int p = 0,
                     int q = 1, bool qnorm = true) {
    ModelConfig cfg;
    cfg.kind = kind;
    cfg.num_entities = ne;
    cfg.num_relations = nr;
    cfg.dim = dim;
    cfg.keci_p = p;
    cfg.keci_q = q;
    cfg.qmult_normalize = qnorm;
    cfg.validate();
    return cfg;
}

MiniBatch random_batch(int m, std::int32_t ne, std::int32_t nr, std::uint64_t seed,
                       bool with_inverted = true) {
    Rng rng(derive_seed(seed, "test-batch"));
    MiniBatch batch;
    for (int i = 0; i < m; ++i) {
        KvsAllExample ex;
        ex.head = static_cast<std::int32_t>(rng.below(static_cast<std::uint64_t>(ne)));
        ex.rel = static_cast<std::int32_t>(rng.below(static_cast<std::uint64_t>(nr)));
        std::uint64_t k = 1 + rng.below(3);
        for (std::uint64_t j = 0; j < k; ++j)
            ex.tails.push_back(static_cast<std::int32_t>(rng.below(static_cast<std::uint64_t>(ne))));
        std::sort(ex.tails.begin(), ex.tails.end());
        ex.tails.erase(std::unique(ex.tails.begin(), ex.tails.end()), ex.tails.end());
        ex.inverted = with_inverted && rng.coin();
        batch.examples.push_back(std::move(ex));
    }
    return batch;
}

double max_rel_err(const Matrix& analytic, const Matrix& fd) {
    double worst = 0.0;
    for (std::size_t i = 0; i < analytic.a.size(); ++i) {
        double denom = std::max({std::abs(analytic.a[i]), std::abs(fd.a[i]), 1e-6});
        worst = std::max(worst, std::abs(analytic.a[i] - fd.a[i]) / denom);
    }
    return worst;
}

}  // namespace

TEST_CASE("Clifford multiplication tables") {
    SUBCASE("Cl(0,1) is the complex numbers") {
        auto t = CliffordTable::make(0, 1);
        CHECK(t.adim == 2);
        CHECK(t.prod_idx[0][1] == 1);
        CHECK(t.prod_sign[0][1] == 1);
        CHECK(t.prod_idx[1][1] == 0);
        CHECK(t.prod_sign[1][1] == -1);  // e1^2 = -1
    }
    SUBCASE("Cl(0,2) is the quaternions under 1,e1,e2,e12 = 1,i,j,k") {
        auto t = CliffordTable::make(0, 2);
        CHECK(t.adim == 4);
        CHECK(t.prod_sign[1][1] == -1);  // i^2 = -1
        CHECK(t.prod_sign[2][2] == -1);  // j^2 = -1
        CHECK(t.prod_idx[1][2] == 3);    // ij = k
        CHECK(t.prod_sign[1][2] == 1);
        CHECK(t.prod_idx[2][1] == 3);    // ji = -k
        CHECK(t.prod_sign[2][1] == -1);
        CHECK(t.prod_idx[3][3] == 0);    // k^2 = -1
        CHECK(t.prod_sign[3][3] == -1);
        CHECK(t.prod_idx[3][1] == 2);    // ki = j
        CHECK(t.prod_sign[3][1] == 1);
        CHECK(t.prod_idx[1][3] == 2);    // ik = -j
        CHECK(t.prod_sign[1][3] == -1);
    }
    SUBCASE("positive-signature generators square to +1") {
        auto t = CliffordTable::make(2, 0);
        CHECK(t.prod_sign[1][1] == 1);
        CHECK(t.prod_sign[2][2] == 1);
        CHECK(t.prod_sign[3][3] == -1);  // (e1e2)^2 = -e1^2 e2^2
        auto m = CliffordTable::make(1, 1);
        CHECK(m.prod_sign[1][1] == 1);
        CHECK(m.prod_sign[2][2] == -1);
        CHECK(m.prod_sign[3][3] == 1);
    }
}

TEST_CASE("DistMult d=2 hand score") {
    auto cfg = make_cfg(ModelKind::DistMult, 3, 1, 2);
    Model m(cfg);
    m.ent.row(0)[0] = 1;
    m.ent.row(0)[1] = 2;
    m.ent.row(1)[0] = 5;
    m.ent.row(1)[1] = 6;
    m.rel.row(0)[0] = 3;
    m.rel.row(0)[1] = 4;
    CHECK(m.score(0, 0, 1) == doctest::Approx(63.0));  // 1*3*5 + 2*4*6
    CHECK(m.score(0, 0, 1) == m.score(1, 0, 0));       // head/tail symmetric
}

TEST_CASE("ComplEx all-ones real parts score 16") {
    auto cfg = make_cfg(ModelKind::ComplEx, 2, 1, 32);
    Model m(cfg);
    // real halves 1, imaginary halves 0
    for (int j = 0; j < 16; ++j) {
        m.ent.row(0)[j] = 1.0;
        m.ent.row(1)[j] = 1.0;
        m.rel.row(0)[j] = 1.0;
    }
    CHECK(m.score(0, 0, 1) == doctest::Approx(16.0));
}

TEST_CASE("QMult with identity relation reduces to a dot product") {
    auto cfg = make_cfg(ModelKind::QMult, 2, 1, 32);
    Model m(cfg);
    m.init(3);
    // identity quaternion (1,0,0,0) per component: w block ones, x/y/z zero
    for (int j = 0; j < 8; ++j) {
        m.rel.row(0)[j] = 1.0;
        m.rel.row(0)[8 + j] = 0.0;
        m.rel.row(0)[16 + j] = 0.0;
        m.rel.row(0)[24 + j] = 0.0;
    }
    double dot = 0.0;
    for (int i = 0; i < 32; ++i) dot += m.ent.row(0)[i] * m.ent.row(1)[i];
    CHECK(m.score(0, 0, 1) == doctest::Approx(dot));
}

TEST_CASE("Keci(0,1) pure-imaginary product picks up e1^2 = -1") {
    auto cfg = make_cfg(ModelKind::Keci, 2, 1, 2, 0, 1);
    Model m(cfg);
    m.ent.row(0)[0] = 0.0;
    m.ent.row(0)[1] = 1.0;  // h = e1
    m.rel.row(0)[0] = 0.0;
    m.rel.row(0)[1] = 1.0;  // r = e1
    m.ent.row(1)[0] = 1.0;
    m.ent.row(1)[1] = 0.0;  // t = 1
    CHECK(m.score(0, 0, 1) == doctest::Approx(-1.0));
}

TEST_CASE("MuRE hand score") {
    auto cfg = make_cfg(ModelKind::MuRE, 2, 1, 2);
    Model m(cfg);
    // h = (1,2) bias 0.5; t = (1,1) bias 0.25; rho = (2,1), tau = (1,0)
    m.ent.row(0)[0] = 1;
    m.ent.row(0)[1] = 2;
    m.ent.row(0)[2] = 0.5;
    m.ent.row(1)[0] = 1;
    m.ent.row(1)[1] = 1;
    m.ent.row(1)[2] = 0.25;
    m.rel.row(0)[0] = 2;
    m.rel.row(0)[1] = 1;
    m.rel.row(0)[2] = 1;
    m.rel.row(0)[3] = 0;
    // rho*h - t - tau = (2-1-1, 2-1-0) = (0,1); phi = -1 + 0.75
    CHECK(m.score(0, 0, 1) == doctest::Approx(-0.25));
}

TEST_CASE("QMult relation normalization makes scores scale invariant") {
    auto cfg = make_cfg(ModelKind::QMult, 5, 2, 32);
    Model m(cfg);
    m.init(17);
    double before = m.score(0, 1, 3);
    for (int j = 0; j < 32; ++j) m.rel.row(1)[j] *= 3.7;
    CHECK(m.score(0, 1, 3) == doctest::Approx(before).epsilon(1e-12));
}

TEST_CASE("MuRE score is maximized at t = rho*h - tau when biases vanish") {
    auto cfg = make_cfg(ModelKind::MuRE, 6, 1, 8);
    Model m(cfg);
    m.init(23);
    for (std::int32_t e = 0; e < 6; ++e) m.ent.row(e)[8] = 0.0;
    for (int k = 0; k < 8; ++k) {
        m.ent.row(5)[k] = m.rel.row(0)[k] * m.ent.row(0)[k] - m.rel.row(0)[8 + k];
    }
    double best = m.score(0, 0, 5);
    CHECK(best == doctest::Approx(0.0));
    for (std::int32_t e = 0; e < 5; ++e) CHECK(m.score(0, 0, e) <= best);
}

TEST_CASE("Keci(0,1) coincides with ComplEx on shared parameters") {
    auto keci = make_cfg(ModelKind::Keci, 6, 2, 32, 0, 1);
    auto cplx = make_cfg(ModelKind::ComplEx, 6, 2, 32);
    Model a(keci), b(cplx);
    a.init(9);
    b.ent = a.ent;
    b.rel = a.rel;

    std::vector<double> gh1(32), gr1(32), gt1(32), gh2(32), gr2(32), gt2(32);
    for (std::int32_t h = 0; h < 6; ++h) {
        for (std::int32_t t = 0; t < 6; ++t) {
            CHECK(a.score(h, 1, t) == doctest::Approx(b.score(h, 1, t)).epsilon(1e-14));
        }
    }
    a.score_grad(2, 0, 4, gh1.data(), gr1.data(), gt1.data());
    b.score_grad(2, 0, 4, gh2.data(), gr2.data(), gt2.data());
    for (int i = 0; i < 32; ++i) {
        CHECK(gh1[static_cast<std::size_t>(i)] ==
              doctest::Approx(gh2[static_cast<std::size_t>(i)]).epsilon(1e-14));
        CHECK(gr1[static_cast<std::size_t>(i)] ==
              doctest::Approx(gr2[static_cast<std::size_t>(i)]).epsilon(1e-14));
        CHECK(gt1[static_cast<std::size_t>(i)] ==
              doctest::Approx(gt2[static_cast<std::size_t>(i)]).epsilon(1e-14));
    }
}

TEST_CASE("Keci(0,2) coincides with unnormalized QMult") {
    auto keci = make_cfg(ModelKind::Keci, 5, 2, 32, 0, 2);
    auto qm = make_cfg(ModelKind::QMult, 5, 2, 32, 0, 1, /*qnorm=*/false);
    Model a(keci), b(qm);
    a.init(31);
    b.ent = a.ent;
    b.rel = a.rel;
    for (std::int32_t h = 0; h < 5; ++h)
        for (std::int32_t t = 0; t < 5; ++t)
            CHECK(a.score(h, 0, t) == doctest::Approx(b.score(h, 0, t)).epsilon(1e-13));

    std::vector<double> gh1(32), gr1(32), gt1(32), gh2(32), gr2(32), gt2(32);
    a.score_grad(1, 1, 3, gh1.data(), gr1.data(), gt1.data());
    b.score_grad(1, 1, 3, gh2.data(), gr2.data(), gt2.data());
    for (int i = 0; i < 32; ++i) {
        CHECK(gh1[static_cast<std::size_t>(i)] ==
              doctest::Approx(gh2[static_cast<std::size_t>(i)]).epsilon(1e-13));
        CHECK(gr1[static_cast<std::size_t>(i)] ==
              doctest::Approx(gr2[static_cast<std::size_t>(i)]).epsilon(1e-13));
        CHECK(gt1[static_cast<std::size_t>(i)] ==
              doctest::Approx(gt2[static_cast<std::size_t>(i)]).epsilon(1e-13));
    }
}

TEST_CASE("Keci(0,1) with zeroed e1 components degenerates to 16-dim DistMult") {
    auto keci = make_cfg(ModelKind::Keci, 4, 1, 32, 0, 1);
    auto dm = make_cfg(ModelKind::DistMult, 4, 1, 16);
    Model a(keci), b(dm);
    a.init(13);
    for (std::int32_t e = 0; e < 4; ++e)
        for (int j = 16; j < 32; ++j) a.ent.row(e)[j] = 0.0;
    for (int j = 16; j < 32; ++j) a.rel.row(0)[j] = 0.0;
    for (std::int32_t e = 0; e < 4; ++e)
        for (int j = 0; j < 16; ++j) b.ent.row(e)[j] = a.ent.row(e)[j];
    for (int j = 0; j < 16; ++j) b.rel.row(0)[j] = a.rel.row(0)[j];

    for (std::int32_t h = 0; h < 4; ++h)
        for (std::int32_t t = 0; t < 4; ++t)
            CHECK(a.score(h, 0, t) == doctest::Approx(b.score(h, 0, t)).epsilon(1e-14));
}

TEST_CASE("init is seeded, bounded, and zeroes MuRE biases") {
    auto cfg = make_cfg(ModelKind::DistMult, 135, 46, 32);
    Model a(cfg), b(cfg), c(cfg);
    a.init(5);
    b.init(5);
    c.init(6);
    CHECK(a.ent.rows == 135);
    CHECK(a.ent.cols == 32);
    CHECK(a.rel.rows == 46);
    CHECK(a.ent.a == b.ent.a);
    CHECK(a.rel.a == b.rel.a);
    CHECK(a.ent.a != c.ent.a);
    for (double v : a.ent.a) {
        CHECK(v >= -0.1);
        CHECK(v < 0.1);
    }

    auto mcfg = make_cfg(ModelKind::MuRE, 10, 3, 32);
    Model m(mcfg);
    m.init(5);
    CHECK(m.ent.cols == 33);
    CHECK(m.rel.cols == 64);
    for (std::int32_t e = 0; e < 10; ++e) CHECK(m.ent.row(e)[32] == 0.0);
}

TEST_CASE("stable binary cross entropy") {
    CHECK(bce_with_logit(0.0, 0.0) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
    CHECK(bce_with_logit(0.0, 1.0) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
    CHECK(bce_with_logit(40.0, 1.0) < 1e-17);   // saturated correct
    CHECK(bce_with_logit(-40.0, 0.0) < 1e-17);
    CHECK(bce_with_logit(-40.0, 1.0) == doctest::Approx(40.0));
    CHECK(std::isfinite(bce_with_logit(700.0, 0.0)));
    CHECK(std::isfinite(bce_with_logit(-700.0, 1.0)));

    // matches the naive formula in extended precision on moderate logits
    Rng rng(77);
    for (int i = 0; i < 6; ++i) {
        double x = rng.uniform(-4.0, 4.0);
        double y = (i % 2 == 0) ? 1.0 : 0.0;
        long double sig = 1.0L / (1.0L + std::exp(static_cast<long double>(-x)));
        long double naive = -(static_cast<long double>(y) * std::log(sig) +
                              (1.0L - static_cast<long double>(y)) * std::log(1.0L - sig));
        CHECK(bce_with_logit(x, y) == doctest::Approx(static_cast<double>(naive)).epsilon(1e-12));
    }
}

TEST_CASE("all-zero parameters give loss ln 2") {
    auto cfg = make_cfg(ModelKind::DistMult, 9, 2, 8);
    Model m(cfg);  // zero initialized
    MiniBatch batch = random_batch(3, 9, 2, 4, /*with_inverted=*/false);
    BatchWorkspace ws;
    CHECK(kvsall_forward(m, batch, ws) == doctest::Approx(std::log(2.0)).epsilon(1e-13));
}

TEST_CASE("saturated logits give a vanishing gradient") {
    auto cfg = make_cfg(ModelKind::DistMult, 3, 1, 4);
    Model m(cfg);
    for (int j = 0; j < 4; ++j) {
        m.ent.row(0)[j] = (j == 0) ? 1.0 : 0.0;  // head = e_0
        m.rel.row(0)[j] = 1.0;
        m.ent.row(1)[j] = (j == 0) ? 40.0 : 0.0;   // positive tail, logit +40
        m.ent.row(2)[j] = (j == 0) ? -40.0 : 0.0;  // negative tail, logit -40
    }
    MiniBatch batch;
    KvsAllExample ex;
    ex.head = 0;
    ex.rel = 0;
    ex.tails = {0, 1};  // entity 0 scores an unsaturated +1, keep it positive
    batch.examples.push_back(ex);

    GradientBuffer grads;
    grads.init(cfg);
    grads.clear();
    BatchWorkspace ws;
    kvsall_forward_backward(m, batch, grads, ws);
    // the saturated rows 1 and 2 sit at sigma(logit) == label, so they are quiet
    for (int j = 0; j < 4; ++j) {
        CHECK(std::abs(grads.ent.row(1)[j]) < 1e-15);
        CHECK(std::abs(grads.ent.row(2)[j]) < 1e-15);
    }
}

TEST_CASE("batched loss and gradients match the per-triple reference") {
    struct Case {
        ModelKind kind;
        int dim;
        int p, q;
        bool qnorm;
    };
    const Case cases[] = {
        {ModelKind::DistMult, 32, 0, 1, true}, {ModelKind::ComplEx, 32, 0, 1, true},
        {ModelKind::QMult, 32, 0, 1, true},    {ModelKind::QMult, 32, 0, 1, false},
        {ModelKind::MuRE, 32, 0, 1, true},     {ModelKind::Keci, 32, 0, 1, true},
        {ModelKind::Keci, 32, 1, 1, true},     {ModelKind::Keci, 32, 2, 0, true},
        {ModelKind::Keci, 32, 0, 0, true},     {ModelKind::DistMult, 6, 0, 1, true},
        {ModelKind::MuRE, 10, 0, 1, true},
    };
    for (const auto& c : cases) {
        CAPTURE(static_cast<int>(c.kind));
        CAPTURE(c.dim);
        auto cfg = make_cfg(c.kind, 17, 4, c.dim, c.p, c.q, c.qnorm);
        Model m(cfg);
        m.init(derive_seed(1, "fixture", static_cast<std::uint64_t>(c.kind),
                           static_cast<std::uint64_t>(c.dim)));
        MiniBatch batch = random_batch(5, 17, 4, 12345 + static_cast<std::uint64_t>(c.kind));

        GradientBuffer ref, bat;
        ref.init(cfg);
        bat.init(cfg);
        ref.clear();
        bat.clear();
        double loss_ref = kvsall_reference(m, batch, ref);
        BatchWorkspace ws;
        double loss_bat = kvsall_forward_backward(m, batch, bat, ws);
        double loss_fwd = kvsall_forward(m, batch, ws);

        CHECK(loss_ref == doctest::Approx(loss_bat).epsilon(1e-12));
        CHECK(loss_fwd == doctest::Approx(loss_bat).epsilon(1e-14));
        CHECK(ref.touched_rel == bat.touched_rel);
        for (std::size_t i = 0; i < ref.ent.a.size(); ++i)
            CHECK(std::abs(ref.ent.a[i] - bat.ent.a[i]) < 1e-12);
        for (std::size_t i = 0; i < ref.rel.a.size(); ++i)
            CHECK(std::abs(ref.rel.a[i] - bat.rel.a[i]) < 1e-12);
    }
}

TEST_CASE("analytic gradients match central finite differences") {
    const double step = 1e-5;
    struct Case {
        ModelKind kind;
        std::vector<int> dims;
    };
    const Case cases[] = {
        {ModelKind::DistMult, {4, 8, 32}}, {ModelKind::ComplEx, {4, 8, 32}},
        {ModelKind::QMult, {4, 8, 32}},    {ModelKind::MuRE, {4, 8, 32}},
        {ModelKind::Keci, {4, 8, 32}},
    };
    for (const auto& c : cases) {
        for (int dim : c.dims) {
            CAPTURE(static_cast<int>(c.kind));
            CAPTURE(dim);
            auto cfg = make_cfg(c.kind, 7, 3, dim);
            Model m(cfg);
            m.init(derive_seed(2, "fd", static_cast<std::uint64_t>(c.kind),
                               static_cast<std::uint64_t>(dim)));
            MiniBatch batch = random_batch(2, 7, 3, 777 + static_cast<std::uint64_t>(dim));

            GradientBuffer grads;
            grads.init(cfg);
            grads.clear();
            BatchWorkspace ws;
            kvsall_forward_backward(m, batch, grads, ws);

            Matrix fd_ent(m.ent.rows, m.ent.cols), fd_rel(m.rel.rows, m.rel.cols);
            Model probe = m;
            auto central = [&](double* slot) {
                double keep = *slot;
                *slot = keep + step;
                double up = kvsall_forward(probe, batch, ws);
                *slot = keep - step;
                double down = kvsall_forward(probe, batch, ws);
                *slot = keep;
                return (up - down) / (2.0 * step);
            };
            for (std::size_t i = 0; i < probe.ent.a.size(); ++i)
                fd_ent.a[i] = central(&probe.ent.a[i]);
            for (std::size_t i = 0; i < probe.rel.a.size(); ++i)
                fd_rel.a[i] = central(&probe.rel.a[i]);

            CHECK(max_rel_err(grads.ent, fd_ent) < 1e-4);
            CHECK(max_rel_err(grads.rel, fd_rel) < 1e-4);
        }
    }
}

TEST_CASE("score_tails agrees with per-triple scoring") {
    for (ModelKind kind : {ModelKind::DistMult, ModelKind::ComplEx, ModelKind::QMult,
                           ModelKind::MuRE, ModelKind::Keci}) {
        auto cfg = make_cfg(kind, 11, 2, 32);
        Model m(cfg);
        m.init(derive_seed(4, "tails", static_cast<std::uint64_t>(kind)));
        std::vector<double> out(11);
        score_tails(m, 3, 1, out.data());
        for (std::int32_t e = 0; e < 11; ++e) {
            CHECK(out[static_cast<std::size_t>(e)] ==
                  doctest::Approx(m.score(3, 1, e)).epsilon(1e-12));
        }
    }
}

TEST_CASE("only relations in the batch appear in the gradient") {
    auto cfg = make_cfg(ModelKind::DistMult, 10, 5, 8);
    Model m(cfg);
    m.init(1);
    MiniBatch batch;
    for (std::int32_t r : {0, 2, 2}) {
        KvsAllExample ex;
        ex.head = r;
        ex.rel = r;
        ex.tails = {1};
        batch.examples.push_back(ex);
    }
    GradientBuffer grads;
    grads.init(cfg);
    grads.clear();
    BatchWorkspace ws;
    kvsall_forward_backward(m, batch, grads, ws);
    CHECK(grads.touched_rel == std::vector<std::int32_t>{0, 2});
    for (int j = 0; j < 8; ++j) {
        CHECK(grads.rel.row(1)[j] == 0.0);
        CHECK(grads.rel.row(3)[j] == 0.0);
        CHECK(grads.rel.row(4)[j] == 0.0);
    }
    // entity rows are dense: even an entity absent from the batch gets tail gradient
    bool nonzero = false;
    for (int j = 0; j < 8; ++j) nonzero |= grads.ent.row(9)[j] != 0.0;
    CHECK(nonzero);
}

TEST_CASE("model config validation") {
    CHECK_THROWS_AS(make_cfg(ModelKind::ComplEx, 3, 1, 5), std::exception);   // odd dim
    CHECK_THROWS_AS(make_cfg(ModelKind::QMult, 3, 1, 6), std::exception);     // not /4
    CHECK_THROWS_AS(make_cfg(ModelKind::Keci, 3, 1, 32, 2, 1), std::exception);  // p+q>2
    CHECK_THROWS_AS(make_cfg(ModelKind::DistMult, 0, 1, 32), std::exception);
    CHECK_THROWS_AS(model_kind_from_string("nope"), std::exception);
    CHECK(model_kind_from_string("mure") == ModelKind::MuRE);
    CHECK(std::string(to_string(ModelKind::Keci)) == "keci");
}
