#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "affect/data.hpp"
#include "affect/train/predictions.hpp"
#include "json.hpp"

namespace affect::metrics {

/// Pearson correlation with population (n) moments. Throws DataError for
/// fewer than two points or a constant input.
double pearson(std::span<const double> x, std::span<const double> y);

double accuracy(std::span<const int> preds, std::span<const int> golds);

struct F1Result {
    double macro = 0.0;
    std::vector<double> per_class;
};

/// Per-class F1 with 0 for any zero denominator; the macro average runs over
/// all k classes, including classes absent from both inputs.
F1Result macro_f1(std::span<const int> preds, std::span<const int> golds, std::size_t k = data::kNumEmotions);

struct Confusion {
    std::vector<std::vector<std::size_t>> counts;  // [gold][pred]
    std::vector<std::vector<double>> normalized;   // rows sum to 1, or all zero
};

Confusion confusion(std::span<const int> preds, std::span<const int> golds, std::size_t k = data::kNumEmotions);

enum class ReportTask { regression, classification };

struct EvalReport {
    ReportTask task = ReportTask::classification;
    std::size_t n = 0;
    std::optional<double> pearson_empathy;
    std::optional<double> pearson_distress;
    std::optional<double> pearson_avg;
    std::optional<double> accuracy;
    std::optional<double> macro_f1;
    std::vector<double> per_class_f1;
    std::optional<Confusion> confusion;
    std::optional<data::Histogram> gold_histogram;
};

/// Aligns predictions with gold records by id and fills every field the task
/// supports. Throws DataError on id mismatch or missing gold labels.
EvalReport build_report(const train::Predictions& predictions, const data::Dataset& gold);

/// Every key is always present (null when not applicable); keys sorted.
nlohmann::json to_json(const EvalReport& report);
/// 7x7 with class names as header row and first column.
std::string confusion_csv(const Confusion& c);
std::string confusion_normalized_csv(const Confusion& c);

} // namespace affect::metrics
