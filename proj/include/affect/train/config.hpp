#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>

#include "affect/nn/model.hpp"
#include "affect/optim.hpp"
#include "json.hpp"

namespace affect::train {

enum class Task { empathy, distress, multitask, emotion };
enum class SnapshotMetric { pearson_empathy, pearson_distress, pearson_avg, macro_f1 };
enum class Preset { paper_faithful, desk_scale };

std::string_view to_string(Task task);
std::string_view to_string(SnapshotMetric metric);
std::string_view to_string(Preset preset);
std::optional<Task> parse_task(std::string_view name);
std::optional<SnapshotMetric> parse_snapshot_metric(std::string_view name);
std::optional<Preset> parse_preset(std::string_view name);

nn::HeadKind head_kind_for(Task task);
SnapshotMetric default_snapshot_metric(Task task);
bool is_regression(Task task);

struct TrainConfig {
    Task task = Task::emotion;
    std::size_t batch_size = 8;
    std::size_t epochs = 0;
    std::uint64_t seed = 0;
    bool shuffle = true;
    SnapshotMetric snapshot_metric = SnapshotMetric::macro_f1;
    optim::AdamWConfig optimizer;
    nn::EncoderConfig encoder;
    Preset preset = Preset::desk_scale;
    /// Also evaluate the training set after every epoch (accuracy for emotion,
    /// eval-mode task loss for regression).
    bool eval_train = false;
    /// Consumed by the CLI when it builds the vocabulary.
    std::size_t vocab_max_size = 8000;
    std::size_t vocab_min_freq = 1;

    bool operator==(const TrainConfig&) const = default;
};

/// Preset values for a task.
///
/// paper_faithful: lr 1e-5, betas (0.9, 0.99), eps 1e-6, no weight decay,
/// batch 16 for single-score regression and 8 for multitask / emotion.
/// desk_scale: the same optimizer and batching with lr 1e-3 and a
/// d_model 64, 2-layer, 4-head, d_ff 128, max_len 64 encoder.
TrainConfig preset_config(Preset preset, Task task);

/// Throws DataError on inconsistent settings (e.g. a snapshot metric the task cannot produce).
void validate(const TrainConfig& cfg);

nlohmann::json to_json(const TrainConfig& cfg);
/// Overlays the keys present in `j` onto `base`; unknown keys are rejected.
TrainConfig apply_json(TrainConfig base, const nlohmann::json& j);
TrainConfig from_json(const nlohmann::json& j);

} // namespace affect::train
