#include "doctest.h"

#include <cmath>
#include <limits>

#include "affect/error.hpp"
#include "affect/optim.hpp"
#include "affect/rng.hpp"

using namespace affect;
using namespace affect::optim;

namespace {

nn::Parameters single(double value) {
    nn::Parameters p;
    p.token_embedding = nn::Tensor(1, 1, value);
    return p;
}

nn::Parameters random_params(std::size_t n, Rng& rng) {
    nn::Parameters p;
    p.token_embedding = nn::Tensor(1, n);
    p.position_embedding = nn::Tensor(2, 3);
    for (double& x : p.token_embedding.data) x = rng.uniform(-1, 1);
    for (double& x : p.position_embedding.data) x = rng.uniform(-1, 1);
    return p;
}

// Textbook Adam, one coordinate at a time.
struct PlainAdam {
    double lr, b1, b2, eps;
    std::vector<double> m, v;
    int t = 0;
    void step(std::vector<double>& theta, const std::vector<double>& g) {
        ++t;
        for (std::size_t i = 0; i < theta.size(); ++i) {
            m[i] = b1 * m[i] + (1 - b1) * g[i];
            v[i] = b2 * v[i] + (1 - b2) * (g[i] * g[i]);
            const double mh = m[i] / (1 - std::pow(b1, t));
            const double vh = v[i] / (1 - std::pow(b2, t));
            theta[i] = theta[i] - lr * mh / (std::sqrt(vh) + eps);
        }
    }
};

const kernels::KernelTable* backends[] = {&kernels::scalar_table(), kernels::avx2_table()};

} // namespace

TEST_CASE("default hyperparameters") {
    const AdamWConfig c;
    CHECK(c.lr == 1e-5);
    CHECK(c.beta1 == 0.9);
    CHECK(c.beta2 == 0.99);
    CHECK(c.eps == 1e-6);
    CHECK(c.weight_decay == 0.0);
    AdamWConfig bad;
    bad.beta2 = 1.0;
    CHECK_THROWS_AS(bad.validate(), DataError);
    bad = AdamWConfig{};
    bad.lr = 0;
    CHECK_THROWS_AS(bad.validate(), DataError);
}

TEST_CASE("first step on a scalar parameter") {
    for (const auto* k : backends) {
        if (k == nullptr) continue;
        AdamWConfig cfg;
        nn::Parameters p = single(0.0);
        OptimState s = init_state(p);
        step(p, single(1.0), s, cfg, *k);
        // m_hat = v_hat = 1 after bias correction.
        CHECK(std::abs(p.token_embedding.data[0] - (-cfg.lr / (1.0 + cfg.eps))) < 1e-12);
        CHECK(s.t == 1);
        CHECK(std::abs(s.m.token_embedding.data[0] - 0.1) < 1e-15);
        CHECK(std::abs(s.v.token_embedding.data[0] - 0.01) < 1e-15);
    }
}

TEST_CASE("zero gradient without decay is an exact no-op") {
    Rng rng(1);
    const nn::Parameters p0 = random_params(11, rng);
    nn::Parameters p = p0;
    OptimState s = init_state(p);
    step(p, nn::zeros_like(p), s, AdamWConfig{});
    CHECK(p == p0);
}

TEST_CASE("zero decay matches plain Adam over several steps") {
    for (const auto* k : backends) {
        if (k == nullptr) continue;
        Rng rng(2);
        nn::Parameters p = random_params(9, rng);
        AdamWConfig cfg;
        cfg.lr = 1e-3;
        OptimState s = init_state(p);
        std::vector<double> ref = p.token_embedding.data;
        PlainAdam adam{cfg.lr, cfg.beta1, cfg.beta2, cfg.eps, std::vector<double>(9), std::vector<double>(9)};
        for (int it = 0; it < 25; ++it) {
            nn::Parameters g = nn::zeros_like(p);
            for (double& x : g.token_embedding.data) x = rng.uniform(-2, 2);
            step(p, g, s, cfg, *k);
            adam.step(ref, g.token_embedding.data);
        }
        for (std::size_t i = 0; i < ref.size(); ++i) CHECK(p.token_embedding.data[i] == ref[i]);
    }
}

TEST_CASE("decoupled decay uses the pre-update value") {
    AdamWConfig cfg;
    cfg.lr = 0.1;
    cfg.weight_decay = 0.5;
    nn::Parameters p = single(2.0);
    OptimState s = init_state(p);
    step(p, single(0.0), s, cfg);
    CHECK(std::abs(p.token_embedding.data[0] - (2.0 - 0.1 * 0.5 * 2.0)) < 1e-15);
}

TEST_CASE("update magnitude is bounded by the computed terms") {
    Rng rng(7);
    AdamWConfig cfg;
    cfg.lr = 1e-2;
    cfg.weight_decay = 0.1;
    nn::Parameters p = random_params(20, rng);
    OptimState s = init_state(p);
    for (int it = 0; it < 10; ++it) {
        const nn::Parameters before = p;
        nn::Parameters g = nn::zeros_like(p);
        for (double& x : g.token_embedding.data) x = rng.uniform(-5, 5);
        step(p, g, s, cfg);
        const double bc1 = 1 - std::pow(cfg.beta1, static_cast<double>(s.t));
        const double bc2 = 1 - std::pow(cfg.beta2, static_cast<double>(s.t));
        for (std::size_t i = 0; i < 20; ++i) {
            const double mh = s.m.token_embedding.data[i] / bc1, vh = s.v.token_embedding.data[i] / bc2;
            const double theta = before.token_embedding.data[i];
            const double bound = cfg.lr * std::abs(mh) / (std::sqrt(vh) + cfg.eps) + cfg.lr * cfg.weight_decay * std::abs(theta);
            CHECK(std::abs(p.token_embedding.data[i] - theta) <= bound * (1 + 1e-12));
        }
    }
}

TEST_CASE("step is deterministic and tensors keep separate state") {
    Rng rng(3);
    const nn::Parameters p0 = random_params(5, rng);
    nn::Parameters g = nn::zeros_like(p0);
    for (double& x : g.token_embedding.data) x = rng.uniform(-1, 1);
    nn::Parameters a = p0, b = p0;
    OptimState sa = init_state(a), sb = init_state(b);
    AdamWConfig cfg;
    step(a, g, sa, cfg);
    step(b, g, sb, cfg);
    CHECK(a == b);
    CHECK(sa.m == sb.m);
    // Gradient only on token_embedding: position_embedding state stays zero.
    for (double x : sa.m.position_embedding.data) CHECK(x == 0.0);
    for (double x : sa.v.position_embedding.data) CHECK(x == 0.0);
    CHECK(a.position_embedding == p0.position_embedding);
}

TEST_CASE("non-finite gradient names the tensor") {
    nn::Parameters p = single(1.0);
    OptimState s = init_state(p);
    try {
        step(p, single(std::numeric_limits<double>::quiet_NaN()), s, AdamWConfig{});
        FAIL("expected a numeric error");
    } catch (const NumericError& e) {
        CHECK(std::string(e.what()).find("tok_emb") != std::string::npos);
    }
    CHECK(s.t == 0);
    CHECK(p.token_embedding.data[0] == 1.0);
    CHECK_THROWS_AS(step(p, single(std::numeric_limits<double>::infinity()), s, AdamWConfig{}), NumericError);
}

TEST_CASE("shape mismatch is rejected") {
    nn::Parameters p = single(1.0);
    OptimState s = init_state(p);
    nn::Parameters g;
    g.token_embedding = nn::Tensor(1, 2);
    CHECK_THROWS_AS(step(p, g, s, AdamWConfig{}), Error);
}
