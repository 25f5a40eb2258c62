#include "affect/nn/model.hpp"

#include <cmath>

#include "affect/error.hpp"
#include "affect/nn/ops.hpp"
#include "affect/rng.hpp"

namespace affect::nn {

std::string_view to_string(HeadKind kind) {
    switch (kind) {
    case HeadKind::regression_single: return "regression_single";
    case HeadKind::regression_dual: return "regression_dual";
    case HeadKind::classify7: return "classify7";
    }
    return "unknown";
}

std::optional<HeadKind> parse_head_kind(std::string_view name) {
    for (HeadKind k : {HeadKind::regression_single, HeadKind::regression_dual, HeadKind::classify7}) {
        if (name == to_string(k)) return k;
    }
    return std::nullopt;
}

std::size_t head_count(HeadKind kind) { return kind == HeadKind::regression_dual ? 2 : 1; }

std::size_t head_width(HeadKind kind) { return kind == HeadKind::classify7 ? 7 : 1; }

void EncoderConfig::validate() const {
    auto fail = [](const std::string& what) { throw DataError("invalid encoder config: " + what); };
    if (vocab_size < text::kReserved) fail("vocab_size must cover the reserved ids");
    if (d_model == 0 || n_layers == 0 || n_heads == 0 || d_ff == 0) fail("dimensions must be positive");
    if (d_model % n_heads != 0) fail("d_model must be divisible by n_heads");
    if (max_len < 2) fail("max_len must be at least 2");
    if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) fail("dropout_rate must lie in [0,1)");
}

namespace {

template <typename P, typename Fn>
void visit(P& p, Fn&& fn) {
    fn(std::string("tok_emb"), p.token_embedding);
    fn(std::string("pos_emb"), p.position_embedding);
    for (std::size_t l = 0; l < p.layers.size(); ++l) {
        auto& L = p.layers[l];
        const std::string pre = "layer" + std::to_string(l) + ".";
        fn(pre + "ln1.scale", L.ln1_scale);
        fn(pre + "ln1.offset", L.ln1_offset);
        fn(pre + "attn.q.weight", L.wq);
        fn(pre + "attn.q.bias", L.bq);
        fn(pre + "attn.k.weight", L.wk);
        fn(pre + "attn.k.bias", L.bk);
        fn(pre + "attn.v.weight", L.wv);
        fn(pre + "attn.v.bias", L.bv);
        fn(pre + "attn.o.weight", L.wo);
        fn(pre + "attn.o.bias", L.bo);
        fn(pre + "ln2.scale", L.ln2_scale);
        fn(pre + "ln2.offset", L.ln2_offset);
        fn(pre + "ffn.in.weight", L.w1);
        fn(pre + "ffn.in.bias", L.b1);
        fn(pre + "ffn.out.weight", L.w2);
        fn(pre + "ffn.out.bias", L.b2);
    }
    fn(std::string("final_ln.scale"), p.final_scale);
    fn(std::string("final_ln.offset"), p.final_offset);
    for (auto& h : p.heads) {
        fn("head." + h.name + ".weight", h.weight);
        fn("head." + h.name + ".bias", h.bias);
    }
}

bool ends_with(const std::string& s, std::string_view suffix) {
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

} // namespace

void Parameters::for_each(const std::function<void(const std::string&, Tensor&)>& fn) { visit(*this, fn); }

void Parameters::for_each(const std::function<void(const std::string&, const Tensor&)>& fn) const {
    visit(*this, fn);
}

std::size_t Parameters::scalar_count() const {
    std::size_t n = 0;
    for_each([&](const std::string&, const Tensor& t) { n += t.size(); });
    return n;
}

std::vector<std::string> Parameters::names() const {
    std::vector<std::string> out;
    for_each([&](const std::string& name, const Tensor&) { out.push_back(name); });
    return out;
}

bool Parameters::all_finite() const {
    bool ok = true;
    for_each([&](const std::string&, const Tensor& t) {
        for (double d : t.data) ok = ok && std::isfinite(d);
    });
    return ok;
}

Parameters zero_parameters(const EncoderConfig& cfg) {
    cfg.validate();
    const std::size_t d = cfg.d_model;
    Parameters p;
    p.token_embedding = Tensor(cfg.vocab_size, d);
    p.position_embedding = Tensor(cfg.max_len, d);
    p.layers.resize(cfg.n_layers);
    for (auto& L : p.layers) {
        L.ln1_scale = Tensor(1, d);
        L.ln1_offset = Tensor(1, d);
        L.wq = Tensor(d, d);
        L.bq = Tensor(1, d);
        L.wk = Tensor(d, d);
        L.bk = Tensor(1, d);
        L.wv = Tensor(d, d);
        L.bv = Tensor(1, d);
        L.wo = Tensor(d, d);
        L.bo = Tensor(1, d);
        L.ln2_scale = Tensor(1, d);
        L.ln2_offset = Tensor(1, d);
        L.w1 = Tensor(d, cfg.d_ff);
        L.b1 = Tensor(1, cfg.d_ff);
        L.w2 = Tensor(cfg.d_ff, d);
        L.b2 = Tensor(1, d);
    }
    p.final_scale = Tensor(1, d);
    p.final_offset = Tensor(1, d);
    auto head = [&](std::string name, std::size_t out) {
        p.heads.push_back(HeadParams{std::move(name), Tensor(d, out), Tensor(1, out)});
    };
    switch (cfg.head_kind) {
    case HeadKind::regression_single: head("score", 1); break;
    case HeadKind::regression_dual:
        head("empathy", 1);
        head("distress", 1);
        break;
    case HeadKind::classify7: head("emotion", 7); break;
    }
    return p;
}

Parameters zeros_like(const Parameters& params) {
    Parameters z = params;
    z.for_each([](const std::string&, Tensor& t) { t.zero(); });
    return z;
}

Parameters init_params(const EncoderConfig& cfg, std::uint64_t seed) {
    Parameters p = zero_parameters(cfg);
    Rng rng(seed);
    p.for_each([&](const std::string& name, Tensor& t) {
        if (ends_with(name, ".bias") || ends_with(name, ".offset")) {
            return;
        }
        if (ends_with(name, ".scale")) {
            std::fill(t.data.begin(), t.data.end(), 1.0);
            return;
        }
        const double bound = std::sqrt(6.0 / static_cast<double>(t.rows + t.cols));
        for (double& w : t.data) w = rng.uniform(-bound, bound);
    });
    return p;
}

BoundParameters bind(Tape& tape, const Parameters& params, Parameters* grads) {
    auto leaf = [&](const Tensor& value, Tensor* sink) { return tape.parameter(value, sink); };
    auto sink = [&](auto member) -> Tensor* { return grads != nullptr ? &((*grads).*member) : nullptr; };
    BoundParameters b;
    b.token_embedding = leaf(params.token_embedding, sink(&Parameters::token_embedding));
    b.position_embedding = leaf(params.position_embedding, sink(&Parameters::position_embedding));
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
        const LayerParams& L = params.layers[l];
        LayerParams* G = grads != nullptr ? &grads->layers[l] : nullptr;
        auto s = [&](Tensor LayerParams::*m) -> Tensor* { return G != nullptr ? &(G->*m) : nullptr; };
        BoundLayer bl;
        bl.ln1_scale = leaf(L.ln1_scale, s(&LayerParams::ln1_scale));
        bl.ln1_offset = leaf(L.ln1_offset, s(&LayerParams::ln1_offset));
        bl.wq = leaf(L.wq, s(&LayerParams::wq));
        bl.bq = leaf(L.bq, s(&LayerParams::bq));
        bl.wk = leaf(L.wk, s(&LayerParams::wk));
        bl.bk = leaf(L.bk, s(&LayerParams::bk));
        bl.wv = leaf(L.wv, s(&LayerParams::wv));
        bl.bv = leaf(L.bv, s(&LayerParams::bv));
        bl.wo = leaf(L.wo, s(&LayerParams::wo));
        bl.bo = leaf(L.bo, s(&LayerParams::bo));
        bl.ln2_scale = leaf(L.ln2_scale, s(&LayerParams::ln2_scale));
        bl.ln2_offset = leaf(L.ln2_offset, s(&LayerParams::ln2_offset));
        bl.w1 = leaf(L.w1, s(&LayerParams::w1));
        bl.b1 = leaf(L.b1, s(&LayerParams::b1));
        bl.w2 = leaf(L.w2, s(&LayerParams::w2));
        bl.b2 = leaf(L.b2, s(&LayerParams::b2));
        b.layers.push_back(bl);
    }
    b.final_scale = leaf(params.final_scale, sink(&Parameters::final_scale));
    b.final_offset = leaf(params.final_offset, sink(&Parameters::final_offset));
    for (std::size_t h = 0; h < params.heads.size(); ++h) {
        HeadParams* G = grads != nullptr ? &grads->heads[h] : nullptr;
        b.heads.emplace_back(leaf(params.heads[h].weight, G != nullptr ? &G->weight : nullptr),
                             leaf(params.heads[h].bias, G != nullptr ? &G->bias : nullptr));
    }
    return b;
}

Var forward(Tape& tape, const BoundParameters& params, const EncoderConfig& cfg,
            std::span<const text::TokenSequence> batch, bool train_mode, ForwardTrace* trace) {
    if (batch.empty()) {
        throw Error("forward: empty batch");
    }
    if (params.layers.size() != cfg.n_layers) {
        throw Error("forward: parameter layer count does not match config");
    }
    const double rate = train_mode ? cfg.dropout_rate : 0.0;
    std::vector<Var> cls;
    cls.reserve(batch.size());
    for (const auto& seq : batch) {
        if (seq.ids.size() != cfg.max_len) {
            throw Error("forward: sequence length " + std::to_string(seq.ids.size()) + " != max_len " +
                        std::to_string(cfg.max_len));
        }
        if (seq.true_length < 1 || seq.true_length > cfg.max_len || seq.ids[0] != text::kCls) {
            throw Error("forward: malformed token sequence");
        }
        const std::span<const int> live(seq.ids.data(), seq.true_length);
        for (int id : live) {
            if (id < 0 || static_cast<std::size_t>(id) >= cfg.vocab_size) {
                throw Error("forward: token id " + std::to_string(id) + " outside vocabulary");
            }
        }
        Var x = add(tape, gather_rows(tape, params.token_embedding, live),
                    leading_rows(tape, params.position_embedding, seq.true_length));
        x = dropout(tape, x, rate);
        for (const auto& L : params.layers) {
            const Var h = layer_norm(tape, x, L.ln1_scale, L.ln1_offset);
            const Var q = linear(tape, h, L.wq, L.bq);
            const Var k = linear(tape, h, L.wk, L.bk);
            const Var v = linear(tape, h, L.wv, L.bv);
            const Var a = self_attention(tape, q, k, v, cfg.n_heads, trace != nullptr ? &trace->attention : nullptr);
            x = add(tape, x, dropout(tape, linear(tape, a, L.wo, L.bo), rate));
            const Var h2 = layer_norm(tape, x, L.ln2_scale, L.ln2_offset);
            const Var f = linear(tape, gelu(tape, linear(tape, h2, L.w1, L.b1)), L.w2, L.b2);
            x = add(tape, x, dropout(tape, f, rate));
        }
        cls.push_back(layer_norm(tape, select_row(tape, x, 0), params.final_scale, params.final_offset));
    }
    return concat_rows(tape, cls);
}

std::vector<Var> head_apply(Tape& tape, const BoundParameters& params, const EncoderConfig& cfg, Var cls) {
    if (params.heads.size() != head_count(cfg.head_kind)) {
        throw Error("head_apply: parameters do not match head kind");
    }
    std::vector<Var> out;
    for (const auto& [w, b] : params.heads) out.push_back(linear(tape, cls, w, b));
    return out;
}

std::vector<std::vector<double>> infer(const Parameters& params, const EncoderConfig& cfg,
                                       std::span<const text::TokenSequence> batch) {
    std::vector<std::vector<double>> rows(batch.size());
    if (batch.empty()) return rows;
    Tape tape(false);
    const BoundParameters bound = bind(tape, params, nullptr);
    const Var cls = forward(tape, bound, cfg, batch, false);
    for (Var h : head_apply(tape, bound, cfg, cls)) {
        const Tensor& v = tape.value(h);
        for (std::size_t i = 0; i < v.rows; ++i) {
            const auto r = v.row(i);
            rows[i].insert(rows[i].end(), r.begin(), r.end());
        }
    }
    return rows;
}

} // namespace affect::nn
