#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "affect/data.hpp"

namespace affect::train {

using ClassScores = std::array<double, data::kNumEmotions>;

/// `id\tempathy\tdistress`; a single-task file carries only its own column.
struct RegressionPredictions {
    std::vector<std::string> ids;
    std::optional<std::vector<double>> empathy;
    std::optional<std::vector<double>> distress;

    bool operator==(const RegressionPredictions&) const = default;
};

/// `id\tp_anger\t...\tp_surprise\tlabel`.
struct ClassificationPredictions {
    std::vector<std::string> ids;
    std::vector<ClassScores> probs;
    std::vector<data::EmotionLabel> labels;

    bool operator==(const ClassificationPredictions&) const = default;
};

using Predictions = std::variant<RegressionPredictions, ClassificationPredictions>;

/// Lowest index among the maximal entries.
data::EmotionLabel argmax_label(const ClassScores& scores);

std::string to_tsv(const Predictions& predictions);
Predictions parse_predictions(std::string_view contents);
void save_predictions(const Predictions& predictions, const std::filesystem::path& path);
Predictions load_predictions(const std::filesystem::path& path);

} // namespace affect::train
