#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "affect/nn/tape.hpp"
#include "affect/nn/tensor.hpp"
#include "affect/text.hpp"

namespace affect::nn {

enum class HeadKind { regression_single, regression_dual, classify7 };

std::string_view to_string(HeadKind kind);
std::optional<HeadKind> parse_head_kind(std::string_view name);
/// Number of head output blocks and their total width.
std::size_t head_count(HeadKind kind);
std::size_t head_width(HeadKind kind);

struct EncoderConfig {
    std::size_t vocab_size = text::kDefaultMaxSize;
    std::size_t d_model = 64;
    std::size_t n_layers = 2;
    std::size_t n_heads = 4;
    std::size_t d_ff = 128;
    std::size_t max_len = 64;
    double dropout_rate = 0.1;
    HeadKind head_kind = HeadKind::classify7;

    /// Throws affect::DataError describing the first violated constraint.
    void validate() const;
    bool operator==(const EncoderConfig&) const = default;
};

struct LayerParams {
    Tensor ln1_scale, ln1_offset;
    Tensor wq, bq, wk, bk, wv, bv, wo, bo;
    Tensor ln2_scale, ln2_offset;
    Tensor w1, b1, w2, b2;
    bool operator==(const LayerParams&) const = default;
};

struct HeadParams {
    std::string name;  // "score", "empathy", "distress" or "emotion"
    Tensor weight;     // d_model x out
    Tensor bias;       // 1 x out
    bool operator==(const HeadParams&) const = default;
};

/// All trainable tensors of the encoder and its head(s). Weights are stored
/// input-major (x * W). The same type holds gradients and optimizer moments.
struct Parameters {
    Tensor token_embedding;     // vocab_size x d_model
    Tensor position_embedding;  // max_len x d_model
    std::vector<LayerParams> layers;
    Tensor final_scale, final_offset;
    std::vector<HeadParams> heads;

    /// Visits every tensor in canonical order with its dotted name
    /// ("tok_emb", "layer0.attn.wq", "head.emotion.weight", ...).
    void for_each(const std::function<void(const std::string&, Tensor&)>& fn);
    void for_each(const std::function<void(const std::string&, const Tensor&)>& fn) const;

    std::size_t scalar_count() const;
    std::vector<std::string> names() const;
    bool all_finite() const;

    bool operator==(const Parameters&) const = default;
};

/// Zero tensors with the shapes `cfg` implies.
Parameters zero_parameters(const EncoderConfig& cfg);
Parameters zeros_like(const Parameters& params);

/// Xavier-uniform weights (bound sqrt(6 / (rows + cols)) per tensor), zero
/// biases, unit layer-norm scales; deterministic in `seed`.
Parameters init_params(const EncoderConfig& cfg, std::uint64_t seed);

/// Parameters bound to a tape as leaf variables.
struct BoundLayer {
    Var ln1_scale, ln1_offset, wq, bq, wk, bk, wv, bv, wo, bo, ln2_scale, ln2_offset, w1, b1, w2, b2;
};
struct BoundParameters {
    Var token_embedding, position_embedding;
    std::vector<BoundLayer> layers;
    Var final_scale, final_offset;
    std::vector<std::pair<Var, Var>> heads;  // (weight, bias)
};

/// `grads` null means no gradient is collected for the parameters.
BoundParameters bind(Tape& tape, const Parameters& params, Parameters* grads);

struct ForwardTrace {
    /// One entry per (example, layer, head): row-stochastic attention matrix
    /// over the example's non-PAD positions.
    std::vector<Tensor> attention;
};

/// Pre-norm transformer encoder. Each sequence is processed over its non-PAD
/// prefix; PAD positions are masked out of attention and cannot influence the
/// CLS state. Returns the final CLS hidden state per example (B x d_model).
/// Dropout is active only when `train_mode`, drawing from the tape's Rng.
Var forward(Tape& tape, const BoundParameters& params, const EncoderConfig& cfg,
            std::span<const text::TokenSequence> batch, bool train_mode, ForwardTrace* trace = nullptr);

/// Head outputs: regression_single -> {B x 1}; regression_dual -> {empathy B x 1,
/// distress B x 1}; classify7 -> {B x 7 logits}.
std::vector<Var> head_apply(Tape& tape, const BoundParameters& params, const EncoderConfig& cfg, Var cls);

/// Eval-mode forward + heads without gradient recording. One row per example:
/// 1, 2 (empathy, distress) or 7 (logits) raw values.
std::vector<std::vector<double>> infer(const Parameters& params, const EncoderConfig& cfg,
                                       std::span<const text::TokenSequence> batch);

} // namespace affect::nn
