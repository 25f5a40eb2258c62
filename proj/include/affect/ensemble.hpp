#pragma once

#include <span>
#include <string_view>
#include <optional>
#include <vector>

#include "affect/train/predictions.hpp"

namespace affect::ensemble {

using train::ClassScores;

enum class ScoreSpace { probability, logit };

std::string_view to_string(ScoreSpace space);
std::optional<ScoreSpace> parse_score_space(std::string_view name);

// Per-element combinations sum the member values in sorted order, so results
// are bit-identical under any permutation of the members.

/// Element-wise arithmetic mean of equally long member vectors.
std::vector<double> ensemble_regression(std::span<const std::vector<double>> members);

struct ClassRow {
    ClassScores sum{};         // unnormalized member sum
    ClassScores normalized{};  // sum / k (probability space) or softmax(sum) (logit space)
    data::EmotionLabel label = data::EmotionLabel::anger;  // argmax of sum, lowest index on ties
};

/// In probability space every member row must be a probability vector
/// (non-negative, sums to 1 within 1e-6); logit space accepts any finite scores.
std::vector<ClassRow> ensemble_classification(std::span<const std::vector<ClassScores>> members, ScoreSpace space);

/// File-level regression ensemble: members must carry the same columns and the
/// same ids in the same order (DataError names the first mismatching id).
train::RegressionPredictions ensemble_regression(std::span<const train::RegressionPredictions> members);

struct ClassificationEnsemble {
    std::vector<std::string> ids;
    std::vector<ClassRow> rows;
    ScoreSpace space = ScoreSpace::probability;

    /// Prediction-file form: normalized scores plus label.
    train::ClassificationPredictions predictions() const;
};

/// File-level classification ensemble. Member files hold probabilities; in
/// logit space they are combined as log-probabilities, which differ from the
/// logits only by a per-row constant.
ClassificationEnsemble ensemble_classification(std::span<const train::ClassificationPredictions> members,
                                               ScoreSpace space);

} // namespace affect::ensemble
