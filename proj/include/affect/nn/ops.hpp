#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "affect/nn/tape.hpp"

// Differentiable tensor operations recorded on a Tape. Shapes are checked;
// violations throw affect::Error.

namespace affect::nn {

/// Rows of `table` selected by `ids` (embedding lookup).
Var gather_rows(Tape& t, Var table, std::span<const int> ids);
/// Rows 0..count-1 of `table`.
Var leading_rows(Tape& t, Var table, std::size_t count);

Var add(Tape& t, Var a, Var b);
Var scale(Tape& t, Var x, double factor);
Var matmul(Tape& t, Var a, Var b);
/// x * weight + bias, bias broadcast over rows.
Var linear(Tape& t, Var x, Var weight, Var bias);

Var layer_norm(Tape& t, Var x, Var scale, Var offset, double eps = 1e-5);
/// Exact GELU, x * Phi(x).
Var gelu(Tape& t, Var x);
/// Inverted dropout driven by the tape's Rng; identity when rate == 0.
Var dropout(Tape& t, Var x, double rate);

/// Multi-head scaled dot-product self-attention over the rows of q, k, v
/// (one row per position, heads are contiguous column blocks). When
/// `probs_out` is non-null, one row-stochastic L x L matrix per head is appended.
Var self_attention(Tape& t, Var q, Var k, Var v, std::size_t n_heads, std::vector<Tensor>* probs_out = nullptr);

Var select_row(Tape& t, Var x, std::size_t row);
Var concat_rows(Tape& t, std::span<const Var> parts);

/// Mean squared error of a B x 1 prediction column against `target`.
Var mse_loss(Tape& t, Var pred, std::span<const double> target);
/// Mean cross-entropy of B x K logits against class indices.
Var cross_entropy_loss(Tape& t, Var logits, std::span<const int> labels);

} // namespace affect::nn
