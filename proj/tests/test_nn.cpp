#include "doctest.h"

#include <cmath>

#include "affect/error.hpp"
#include "affect/nn/losses.hpp"
#include "affect/nn/model.hpp"
#include "affect/nn/ops.hpp"
#include "affect/rng.hpp"
#include "affect/train/trainer.hpp"
#include "gradcheck.hpp"
#include "oracles.hpp"

using namespace affect;
using namespace affect::nn;

namespace {

EncoderConfig tiny(HeadKind kind) {
    EncoderConfig c;
    c.vocab_size = 20;
    c.d_model = 8;
    c.n_layers = 1;
    c.n_heads = 2;
    c.d_ff = 16;
    c.max_len = 6;
    c.dropout_rate = 0.0;
    c.head_kind = kind;
    return c;
}

text::TokenSequence seq(std::vector<int> live, std::size_t max_len) {
    text::TokenSequence s;
    s.ids.assign(max_len, text::kPad);
    s.ids[0] = text::kCls;
    for (std::size_t i = 0; i < live.size(); ++i) s.ids[i + 1] = live[i];
    s.true_length = live.size() + 1;
    return s;
}

std::vector<text::TokenSequence> random_batch(std::size_t n, const EncoderConfig& cfg, Rng& rng) {
    std::vector<text::TokenSequence> out;
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<int> live;
        const auto len = rng.uniform_below(cfg.max_len);  // 0 .. max_len - 1 tokens after CLS
        for (std::uint64_t k = 0; k < len; ++k) {
            live.push_back(static_cast<int>(text::kReserved + rng.uniform_below(cfg.vocab_size - text::kReserved)));
        }
        out.push_back(seq(live, cfg.max_len));
    }
    return out;
}

// Perturbs every tensor away from its structured initial values so biases,
// offsets and scales take generic values in the gradient check.
Parameters jittered(const EncoderConfig& cfg, std::uint64_t seed) {
    Parameters p = init_params(cfg, seed);
    Rng rng(seed ^ 0xabcdef);
    p.for_each([&](const std::string&, Tensor& t) {
        for (double& x : t.data) x += rng.uniform(-0.2, 0.2);
    });
    return p;
}

train::Task task_for(HeadKind kind) {
    switch (kind) {
    case HeadKind::regression_single: return train::Task::empathy;
    case HeadKind::regression_dual: return train::Task::multitask;
    case HeadKind::classify7: break;
    }
    return train::Task::emotion;
}

} // namespace

TEST_CASE("init is deterministic, structured and seed dependent") {
    const EncoderConfig cfg = tiny(HeadKind::classify7);
    const Parameters a = init_params(cfg, 5);
    CHECK(a == init_params(cfg, 5));
    CHECK_FALSE(a == init_params(cfg, 6));
    a.for_each([&](const std::string& name, const Tensor& t) {
        const bool bias = name.ends_with(".bias") || name.ends_with(".offset");
        const bool scale = name.ends_with(".scale");
        const double bound = std::sqrt(6.0 / static_cast<double>(t.rows + t.cols));
        for (double x : t.data) {
            if (bias) CHECK(x == 0.0);
            else if (scale) CHECK(x == 1.0);
            else CHECK(std::abs(x) <= bound);
        }
    });
    CHECK(a.heads.size() == 1);
    CHECK(a.heads[0].weight.cols == 7);
    CHECK(init_params(tiny(HeadKind::regression_dual), 1).heads.size() == 2);
}

TEST_CASE("encoder config validation") {
    EncoderConfig c = tiny(HeadKind::classify7);
    c.n_heads = 3;
    CHECK_THROWS_AS(c.validate(), DataError);
    c = tiny(HeadKind::classify7);
    c.dropout_rate = 1.0;
    CHECK_THROWS_AS(c.validate(), DataError);
    c = tiny(HeadKind::classify7);
    c.d_ff = 0;
    CHECK_THROWS_AS(c.validate(), DataError);
}

TEST_CASE("forward matches a full-length masked reference encoder") {
    Rng rng(17);
    for (HeadKind kind : {HeadKind::regression_single, HeadKind::regression_dual, HeadKind::classify7}) {
        EncoderConfig cfg = tiny(kind);
        cfg.n_layers = 2;
        const Parameters p = jittered(cfg, 3);
        const auto batch = random_batch(6, cfg, rng);
        const auto got = infer(p, cfg, batch);
        const auto want = oracle::model_outputs(p, cfg, batch);
        REQUIRE(got.size() == want.size());
        for (std::size_t i = 0; i < got.size(); ++i) {
            REQUIRE(got[i].size() == head_width(kind) * head_count(kind));
            for (std::size_t j = 0; j < got[i].size(); ++j) CHECK(got[i][j] == doctest::Approx(want[i][j]).epsilon(1e-10));
        }
    }
}

TEST_CASE("attention rows sum to one over live positions") {
    const EncoderConfig cfg = tiny(HeadKind::classify7);
    const Parameters p = init_params(cfg, 1);
    Rng rng(4);
    const auto batch = random_batch(5, cfg, rng);
    Tape tape(false);
    ForwardTrace trace;
    forward(tape, bind(tape, p, nullptr), cfg, batch, false, &trace);
    CHECK(trace.attention.size() == batch.size() * cfg.n_layers * cfg.n_heads);
    std::size_t k = 0;
    for (const auto& s : batch) {
        for (std::size_t h = 0; h < cfg.n_heads; ++h, ++k) {
            const Tensor& a = trace.attention[k];
            CHECK(a.rows == s.true_length);
            CHECK(a.cols == s.true_length);
            for (std::size_t i = 0; i < a.rows; ++i) {
                double sum = 0;
                for (double x : a.row(i)) {
                    CHECK(x >= 0.0);
                    sum += x;
                }
                CHECK(std::abs(sum - 1.0) < 1e-10);
            }
        }
    }
}

TEST_CASE("CLS-only input is finite; duplicated examples give identical rows") {
    const EncoderConfig cfg = tiny(HeadKind::classify7);
    const Parameters p = init_params(cfg, 2);
    const auto lone = infer(p, cfg, std::vector{seq({}, cfg.max_len)});
    for (double x : lone[0]) CHECK(std::isfinite(x));
    const auto s = seq({5, 9, 3}, cfg.max_len);
    const auto rows = infer(p, cfg, std::vector{s, s, s});
    CHECK(rows[0] == rows[1]);
    CHECK(rows[1] == rows[2]);
}

TEST_CASE("forward rejects malformed input") {
    const EncoderConfig cfg = tiny(HeadKind::classify7);
    const Parameters p = init_params(cfg, 2);
    auto bad = seq({4}, cfg.max_len);
    bad.ids.push_back(0);
    CHECK_THROWS_AS(infer(p, cfg, std::vector{bad}), Error);
    auto oob = seq({25}, cfg.max_len);
    CHECK_THROWS_AS(infer(p, cfg, std::vector{oob}), Error);
    auto nocls = seq({4}, cfg.max_len);
    nocls.ids[0] = 5;
    CHECK_THROWS_AS(infer(p, cfg, std::vector{nocls}), Error);
}

TEST_CASE("zero CLS vector with zero head bias gives zero output") {
    Tape tape(false);
    const Tensor w(8, 7, 0.3), b(1, 7, 0.0);
    const Var y = linear(tape, tape.constant(Tensor(2, 8, 0.0)), tape.constant(w), tape.constant(b));
    for (double x : tape.value(y).data) CHECK(x == 0.0);
    CHECK(tape.value(y).cols == 7);
}

TEST_CASE("dual heads are independent") {
    const EncoderConfig cfg = tiny(HeadKind::regression_dual);
    Parameters p = init_params(cfg, 8);
    Rng rng(1);
    const auto batch = random_batch(4, cfg, rng);
    const auto before = infer(p, cfg, batch);
    for (double& w : p.heads[0].weight.data) w += 0.5;
    p.heads[0].bias.data[0] += 1.0;
    const auto after = infer(p, cfg, batch);
    for (std::size_t i = 0; i < batch.size(); ++i) {
        CHECK(after[i][1] == before[i][1]);
        CHECK(after[i][0] != before[i][0]);
    }
}

TEST_CASE("unused head receives zero gradient") {
    const EncoderConfig cfg = tiny(HeadKind::regression_dual);
    const Parameters p = jittered(cfg, 2);
    Rng rng(2);
    const auto batch = random_batch(3, cfg, rng);
    const std::vector<double> gold = {2.0, 3.0, 4.0};
    const Parameters g = testing::autodiff_gradients(p, [&](Tape& t, const BoundParameters& b) {
        return mse_loss(t, head_apply(t, b, cfg, forward(t, b, cfg, batch, false))[0], gold);
    });
    for (double x : g.heads[1].weight.data) CHECK(x == 0.0);
    CHECK(g.heads[1].bias.data[0] == 0.0);
    double mass = 0;
    for (double x : g.heads[0].weight.data) mass += std::abs(x);
    CHECK(mass > 0.0);
}

TEST_CASE("backward of a scaled loss is the scaled gradient") {
    const EncoderConfig cfg = tiny(HeadKind::classify7);
    const Parameters p = jittered(cfg, 4);
    Rng rng(5);
    const auto batch = random_batch(3, cfg, rng);
    const std::vector<int> labels = {0, 3, 6};
    auto base = [&](Tape& t, const BoundParameters& b) {
        return cross_entropy_loss(t, head_apply(t, b, cfg, forward(t, b, cfg, batch, false))[0], labels);
    };
    const Parameters g1 = testing::autodiff_gradients(p, base);
    const Parameters g3 = testing::autodiff_gradients(p, [&](Tape& t, const BoundParameters& b) { return scale(t, base(t, b), 3.0); });
    std::vector<double> a, c;
    g1.for_each([&](const std::string&, const Tensor& t) { a.insert(a.end(), t.data.begin(), t.data.end()); });
    g3.for_each([&](const std::string&, const Tensor& t) { c.insert(c.end(), t.data.begin(), t.data.end()); });
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(c[i] - 3.0 * a[i]) <= 1e-12 * (1.0 + std::abs(3.0 * a[i])));
}

TEST_CASE("gradient check on every head kind") {
    Rng rng(6);
    for (HeadKind kind : {HeadKind::regression_single, HeadKind::regression_dual, HeadKind::classify7}) {
        const EncoderConfig cfg = tiny(kind);
        const Parameters p = jittered(cfg, 12);
        const auto batch = random_batch(3, cfg, rng);
        train::Targets targets{{2.0, 5.5, 3.25}, {6.0, 1.5, 4.0}, {1, 4, 6}};
        const auto result = testing::gradient_check(p, [&](Tape& t, const BoundParameters& b) {
            return train::task_loss(t, b, cfg, task_for(kind), batch, targets, false);
        });
        INFO("head " << to_string(kind) << " worst tensor " << result.worst_tensor);
        CHECK(result.max_error < 1e-4);
        CHECK(result.scalars == p.scalar_count());
    }
}

TEST_CASE("gradient check with dropout on a fixed mask") {
    EncoderConfig cfg = tiny(HeadKind::classify7);
    cfg.dropout_rate = 0.3;
    const Parameters p = jittered(cfg, 1);
    Rng rng(7);
    const auto batch = random_batch(2, cfg, rng);
    const train::Targets targets{{}, {}, {2, 5}};
    const auto loss = [&](Tape& t, const BoundParameters& b) {
        return train::task_loss(t, b, cfg, train::Task::emotion, batch, targets, true);
    };
    // Every evaluation tape starts from the same dropout seed, so the masks repeat.
    const auto result = testing::gradient_check(p, loss);
    CHECK(result.max_error < 1e-4);
}

TEST_CASE("tape can only be consumed once") {
    Tape tape(true);
    Tensor w(1, 1, 2.0), g(1, 1);
    const Var x = tape.parameter(w, &g);
    const Var y = scale(tape, x, 3.0);
    tape.backward(y);
    CHECK(g.data[0] == 3.0);
    CHECK_THROWS_AS(tape.backward(y), Error);
    Tape vector_tape(true);
    Tensor v(1, 2, 1.0), gv(1, 2);
    CHECK_THROWS_AS(vector_tape.backward(vector_tape.parameter(v, &gv)), Error);
    Tape frozen(false);
    CHECK_THROWS_AS(frozen.backward(frozen.constant(Tensor(1, 1, 1.0))), Error);
}

TEST_CASE("backward visits each recorded op once") {
    const EncoderConfig cfg = tiny(HeadKind::classify7);
    const Parameters p = init_params(cfg, 1);
    Parameters g = zeros_like(p);
    Rng rng(3);
    const auto batch = random_batch(2, cfg, rng);
    Tape tape(true);
    const auto b = bind(tape, p, &g);
    const std::size_t leaves = tape.size();
    const Var loss = cross_entropy_loss(tape, head_apply(tape, b, cfg, forward(tape, b, cfg, batch, false))[0],
                                        std::vector<int>{1, 2});
    tape.backward(loss);
    CHECK(tape.backward_visits() == tape.size() - leaves);
}

TEST_CASE("softmax properties") {
    const std::vector<double> zero(7, 0.0);
    for (double p : softmax(zero)) CHECK(std::abs(p - 1.0 / 7.0) < 1e-15);
    const std::vector<double> one = {1, 0, 0, 0, 0, 0, 0};
    const auto s = softmax(one);
    const double e = std::exp(1.0);
    CHECK(std::abs(s[0] - e / (e + 6)) < 1e-12);
    CHECK(std::abs(s[3] - 1 / (e + 6)) < 1e-12);
    Rng rng(9);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> z(7), shifted(7);
        const double c = rng.uniform(-50, 50);
        for (std::size_t i = 0; i < 7; ++i) {
            z[i] = rng.uniform(-10, 10);
            shifted[i] = z[i] + c;
        }
        const auto a = softmax(z), b = softmax(shifted);
        double sum = 0;
        for (std::size_t i = 0; i < 7; ++i) {
            CHECK(a[i] > 0.0);
            CHECK(std::abs(a[i] - b[i]) < 1e-12);
            sum += a[i];
        }
        CHECK(std::abs(sum - 1.0) < 1e-12);
    }
}

TEST_CASE("value losses") {
    const std::vector<double> p = {1.0, 2.0}, zero = {0.0}, two = {2.0};
    CHECK(loss_mse(p, p) == 0.0);
    CHECK(loss_mse(zero, two) == 4.0);
    CHECK_THROWS_AS(loss_mse(p, two), Error);
    const std::vector<double> e1 = {1.0}, g1 = {2.0}, d1 = {1.0}, h1 = {1.0 + std::sqrt(2.0)};
    CHECK(std::abs(loss_multitask(e1, d1, g1, h1) - 3.0) < 1e-12);
    CHECK(loss_multitask(p, p, p, p) == 0.0);
    Rng rng(10);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> a(5), b(5);
        for (std::size_t i = 0; i < 5; ++i) {
            a[i] = rng.uniform(-3, 3);
            b[i] = rng.uniform(-3, 3);
        }
        CHECK(std::abs(loss_mse(a, b) - oracle::mse(a, b)) < 1e-12);
    }
}

TEST_CASE("cross entropy values") {
    const std::vector<std::vector<double>> uniform = {std::vector<double>(7, 0.3)};
    const std::vector<int> gold0 = {0};
    CHECK(std::abs(loss_cross_entropy(uniform, gold0) - std::log(7.0)) < 1e-12);
    std::vector<std::vector<double>> hot = {std::vector<double>(7, 0.0)};
    hot[0][4] = 1000.0;
    const std::vector<int> gold4 = {4};
    CHECK(loss_cross_entropy(hot, gold4) < 1e-6);
    const std::vector<std::vector<double>> pair = {{0.1, -2, 3, 0, 0, 1, 2}, {5, 4, 3, 2, 1, 0, -1}};
    const std::vector<int> gold = {2, 6};
    const double want = (oracle::cross_entropy_row(pair[0], 2) + oracle::cross_entropy_row(pair[1], 6)) / 2.0;
    CHECK(std::abs(loss_cross_entropy(pair, gold) - want) < 1e-12);
    const std::vector<int> bad = {7};
    CHECK_THROWS_AS(loss_cross_entropy(uniform, bad), Error);
}

TEST_CASE("tape loss ops agree with value losses") {
    Tape tape(false);
    const Tensor logits = [] {
        Tensor t(2, 7);
        for (std::size_t i = 0; i < t.size(); ++i) t.data[i] = std::sin(static_cast<double>(i));
        return t;
    }();
    const std::vector<int> labels = {3, 0};
    const Var ce = cross_entropy_loss(tape, tape.constant(logits), labels);
    const std::vector<std::vector<double>> rows = {{logits.row(0).begin(), logits.row(0).end()},
                                                   {logits.row(1).begin(), logits.row(1).end()}};
    CHECK(std::abs(tape.value(ce).data[0] - loss_cross_entropy(rows, labels)) < 1e-12);
}
