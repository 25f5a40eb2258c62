#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "affect/nn/model.hpp"
#include "affect/train/config.hpp"

namespace affect::train {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
    std::uint32_t format_version = kCheckpointVersion;
    TrainConfig config;  // encoder block fully resolved (vocab_size, head_kind)
    std::string vocab_hash;
    nn::Parameters params;
    std::optional<double> best_metric;
    int best_epoch = -1;  // -1: the returned parameters are the initialization
    std::uint64_t seed = 0;

    bool operator==(const Checkpoint&) const = default;
};

// Layout: "MTAF", u32 LE version, u64 LE header length, UTF-8 JSON header
// (config, vocab hash, best metric/epoch, seed, tensor manifest with name,
// shape and byte offset into the data section), then little-endian IEEE-754
// doubles in manifest order.
std::string serialize_checkpoint(const Checkpoint& ckpt);
/// Throws FormatError for wrong magic, unsupported version, truncation or a
/// manifest that does not match the configured architecture.
Checkpoint deserialize_checkpoint(std::string_view bytes);

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

} // namespace affect::train
