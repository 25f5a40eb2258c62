#pragma once

#include <span>
#include <vector>

namespace affect::nn {

/// Max-shifted softmax.
std::vector<double> softmax(std::span<const double> scores);
double log_sum_exp(std::span<const double> scores);

// Value-level losses; the Tape ops in ops.hpp compute the same quantities.
// Length mismatches throw affect::Error.
double loss_mse(std::span<const double> pred, std::span<const double> target);
/// Unit-weight sum of the empathy and distress MSE.
double loss_multitask(std::span<const double> pred_empathy, std::span<const double> pred_distress,
                      std::span<const double> gold_empathy, std::span<const double> gold_distress);
/// Mean over rows of -log softmax(row)[gold].
double loss_cross_entropy(std::span<const std::vector<double>> logits, std::span<const int> gold);

} // namespace affect::nn
