#include "affect/nn/losses.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "affect/error.hpp"

namespace affect::nn {

std::vector<double> softmax(std::span<const double> scores) {
    if (scores.empty()) return {};
    const double mx = *std::max_element(scores.begin(), scores.end());
    std::vector<double> out(scores.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        out[i] = std::exp(scores[i] - mx);
        sum += out[i];
    }
    for (double& p : out) p /= sum;
    return out;
}

double log_sum_exp(std::span<const double> scores) {
    if (scores.empty()) throw Error("log_sum_exp of an empty vector");
    const double mx = *std::max_element(scores.begin(), scores.end());
    double sum = 0.0;
    for (double s : scores) sum += std::exp(s - mx);
    return mx + std::log(sum);
}

double loss_mse(std::span<const double> pred, std::span<const double> target) {
    if (pred.size() != target.size() || pred.empty()) {
        throw Error("loss_mse: lengths " + std::to_string(pred.size()) + " and " + std::to_string(target.size()));
    }
    double s = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = pred[i] - target[i];
        s += d * d;
    }
    return s / static_cast<double>(pred.size());
}

double loss_multitask(std::span<const double> pred_empathy, std::span<const double> pred_distress,
                      std::span<const double> gold_empathy, std::span<const double> gold_distress) {
    if (pred_empathy.size() != pred_distress.size()) {
        throw Error("loss_multitask: head batch sizes differ");
    }
    return loss_mse(pred_empathy, gold_empathy) + loss_mse(pred_distress, gold_distress);
}

double loss_cross_entropy(std::span<const std::vector<double>> logits, std::span<const int> gold) {
    if (logits.size() != gold.size() || logits.empty()) {
        throw Error("loss_cross_entropy: batch and label counts differ");
    }
    double total = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        if (gold[i] < 0 || static_cast<std::size_t>(gold[i]) >= logits[i].size()) {
            throw Error("loss_cross_entropy: label out of range: " + std::to_string(gold[i]));
        }
        total += log_sum_exp(logits[i]) - logits[i][static_cast<std::size_t>(gold[i])];
    }
    return total / static_cast<double>(logits.size());
}

} // namespace affect::nn
