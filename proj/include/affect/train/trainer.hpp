#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "affect/data.hpp"
#include "affect/nn/model.hpp"
#include "affect/text.hpp"
#include "affect/train/checkpoint.hpp"
#include "affect/train/config.hpp"
#include "affect/train/predictions.hpp"
#include "json.hpp"

namespace affect::train {

/// Index batches for one epoch. With `shuffle`, the permutation is seeded by
/// mix_seed(seed, epoch); otherwise records keep their order. The last batch
/// may be short. Throws DataError for n == 0 or batch_size == 0.
std::vector<std::vector<std::size_t>> make_batches(std::size_t n, std::size_t batch_size, bool shuffle,
                                                   std::uint64_t seed, std::size_t epoch);
std::vector<std::vector<std::size_t>> make_batches(const data::Dataset& d, std::size_t batch_size, bool shuffle,
                                                   std::uint64_t seed, std::size_t epoch);

/// Gold values a task trains against, index-aligned with a Dataset.
struct Targets {
    std::vector<double> empathy;
    std::vector<double> distress;
    std::vector<int> labels;

    Targets subset(std::span<const std::size_t> idx) const;
};

/// Throws DataError naming the first record that lacks a required label.
Targets targets_for(const data::Dataset& d, Task task);

std::vector<text::TokenSequence> encode_all(const data::Dataset& d, const text::Vocab& vocab, std::size_t max_len);

/// Records forward + heads + the task objective on `tape` and returns the scalar loss:
/// MSE (empathy/distress), empathy MSE + distress MSE (multitask), or cross-entropy (emotion).
nn::Var task_loss(nn::Tape& tape, const nn::BoundParameters& params, const nn::EncoderConfig& cfg, Task task,
                  std::span<const text::TokenSequence> batch, const Targets& targets, bool train_mode);

struct EpochRecord {
    std::size_t epoch = 0;
    double train_loss = 0.0;                     // mean over records of the batch losses
    std::map<std::string, double> dev;           // pearson_* / macro_f1 / accuracy
    std::optional<double> snapshot_value;        // absent when the metric was undefined
    std::optional<double> train_metric;          // with eval_train
};

struct TrainReport {
    std::vector<EpochRecord> epochs;
    int best_epoch = -1;
    std::optional<double> best_metric;
    double wall_seconds = 0.0;
    std::uint64_t seed = 0;
    std::string snapshot_metric;
};

nlohmann::json to_json(const TrainReport& report);

struct TrainResult {
    Checkpoint checkpoint;
    TrainReport report;
};

/// Fills in encoder.vocab_size and encoder.head_kind from the vocabulary and task.
TrainConfig resolve(TrainConfig cfg, const text::Vocab& vocab);

/// Seeded training with per-epoch dev evaluation. The returned checkpoint holds
/// the parameters of the epoch with the highest snapshot metric (earliest on
/// ties); with no defined metric it holds the initialization.
TrainResult train(const data::Dataset& train_set, const data::Dataset& dev_set, const text::Vocab& vocab,
                  const TrainConfig& cfg);

/// Dev metrics of `params` on an encoded set (eval mode).
std::map<std::string, double> evaluate(const nn::Parameters& params, const nn::EncoderConfig& enc, Task task,
                                       std::span<const text::TokenSequence> seqs, const Targets& targets);

struct PredictOptions {
    bool clamp_scores = false;  // clamp regression outputs to [1,7]
};

/// Eval-mode predictions in dataset order. Throws DataError when the vocabulary
/// hash differs from the one recorded in the checkpoint.
Predictions predict(const Checkpoint& ckpt, const data::Dataset& d, const text::Vocab& vocab,
                    const PredictOptions& options = {});

struct SweepEntry {
    std::uint64_t seed = 0;
    std::optional<double> best_metric;
    int best_epoch = -1;
};

struct SweepReport {
    std::string metric;
    std::vector<SweepEntry> entries;
    std::optional<double> mean;
    std::optional<double> stddev;  // sample standard deviation (n - 1)
    std::optional<double> min;
    std::optional<double> max;
};

/// Summary statistics over the entries that have a metric.
SweepReport summarize(std::string metric, std::vector<SweepEntry> entries);

/// One independent training run per seed; up to `jobs` runs execute concurrently.
SweepReport seed_sweep(const data::Dataset& train_set, const data::Dataset& dev_set, const text::Vocab& vocab,
                       const TrainConfig& cfg, std::span<const std::uint64_t> seeds, std::size_t jobs = 1);

nlohmann::json to_json(const SweepReport& report);

} // namespace affect::train
