#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace affect::data {

/// Emotion classes in canonical (alphabetical) order; the enumerator value is the class code.
enum class EmotionLabel : int { anger = 0, disgust, fear, joy, neutral, sadness, surprise };

inline constexpr std::size_t kNumEmotions = 7;

inline constexpr std::array<std::string_view, kNumEmotions> kEmotionNames = {
    "anger", "disgust", "fear", "joy", "neutral", "sadness", "surprise"};

constexpr int code(EmotionLabel label) { return static_cast<int>(label); }
EmotionLabel label_from_code(int code);
std::string_view to_string(EmotionLabel label);
/// Case-insensitive, surrounding whitespace ignored.
std::optional<EmotionLabel> parse_emotion(std::string_view text);

inline constexpr double kScoreMin = 1.0;
inline constexpr double kScoreMax = 7.0;

struct EssayRecord {
    std::string id;
    std::string text;
    std::optional<double> empathy;
    std::optional<double> distress;
    std::optional<EmotionLabel> emotion;
    /// Columns the loader does not interpret, in file column order.
    std::vector<std::pair<std::string, std::string>> extras;

    bool operator==(const EssayRecord&) const = default;
};

enum class Split { train, dev, test, pool, derived };

std::string_view to_string(Split split);
std::optional<Split> parse_split(std::string_view text);

struct Dataset {
    Split split = Split::train;
    std::vector<EssayRecord> records;
    /// Set by balanced augmentation when a pool class had to be drawn with replacement.
    bool with_replacement_used = false;

    std::size_t size() const noexcept { return records.size(); }
    bool empty() const noexcept { return records.empty(); }
    bool operator==(const Dataset&) const = default;
};

using Histogram = std::array<std::size_t, kNumEmotions>;

// Loaders throw FormatError for file-level problems and RowError (with the
// 1-based line number) for invalid rows.
Dataset parse_task_tsv(std::string_view contents, Split split);
Dataset load_task_tsv(const std::filesystem::path& path, Split split);

/// Pool rows without an `id` column get ids "pool-<row>".
Dataset parse_pool_tsv(std::string_view contents);
Dataset load_pool_tsv(const std::filesystem::path& path);

/// Serializes in the task TSV layout: id, essay, empathy, distress, emotion, then extras.
/// Absent scores/labels are written as empty fields.
std::string to_tsv(const Dataset& dataset);
void save_tsv(const Dataset& dataset, const std::filesystem::path& path);

/// Throws DataError naming the first record without an emotion label.
Histogram class_histogram(const Dataset& dataset);

/// `class,count` CSV with one row per class in canonical order.
std::string histogram_csv(const Histogram& histogram);

/// Throws DataError when ids repeat.
void check_unique_ids(const Dataset& dataset);

} // namespace affect::data
