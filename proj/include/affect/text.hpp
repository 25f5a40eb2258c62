#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "affect/data.hpp"

namespace affect::text {

inline constexpr int kPad = 0;
inline constexpr int kUnk = 1;
inline constexpr int kCls = 2;
inline constexpr std::size_t kReserved = 3;

inline constexpr std::size_t kDefaultMaxSize = 8000;
inline constexpr std::size_t kDefaultMinFreq = 1;
inline constexpr std::size_t kDefaultMaxLen = 128;

/// Lowercased word tokens. Whitespace separates words; leading and trailing
/// ASCII punctuation characters of each word become single-character tokens.
std::vector<std::string> tokenize(std::string_view text);

class Vocab {
public:
    Vocab();  // reserved entries only

    std::size_t size() const noexcept { return tokens_.size(); }
    std::size_t max_size() const noexcept { return max_size_; }
    std::size_t min_freq() const noexcept { return min_freq_; }

    /// kUnk for out-of-vocabulary tokens.
    int id(std::string_view token) const;
    const std::string& token(int id) const;
    const std::vector<std::string>& tokens() const noexcept { return tokens_; }

    /// JSON header line followed by `token\tid` lines.
    std::string serialize() const;
    static Vocab deserialize(std::string_view contents);
    void save(const std::filesystem::path& path) const;
    static Vocab load(const std::filesystem::path& path);

    /// FNV-1a of the serialized form; checkpoints record it.
    std::string hash() const;

    bool operator==(const Vocab& other) const { return tokens_ == other.tokens_ && max_size_ == other.max_size_ && min_freq_ == other.min_freq_; }

private:
    friend Vocab build_vocab(const data::Dataset&, std::size_t, std::size_t);
    void append(std::string token);

    std::vector<std::string> tokens_;
    std::unordered_map<std::string, int> index_;
    std::size_t max_size_ = kDefaultMaxSize;
    std::size_t min_freq_ = kDefaultMinFreq;
};

/// Tokens ordered by descending frequency, ties lexicographic; frequency below
/// `min_freq` excluded; at most `max_size` entries including the reserved ones.
Vocab build_vocab(const data::Dataset& train, std::size_t max_size = kDefaultMaxSize,
                  std::size_t min_freq = kDefaultMinFreq);

struct TokenSequence {
    std::vector<int> ids;          // exactly max_len entries, ids[0] == kCls
    std::size_t true_length = 0;   // non-PAD prefix length

    bool operator==(const TokenSequence&) const = default;
};

TokenSequence encode(std::string_view text, const Vocab& vocab, std::size_t max_len = kDefaultMaxLen);

/// Tokens of the non-PAD positions after the leading CLS.
std::vector<std::string> decode(const TokenSequence& seq, const Vocab& vocab);

} // namespace affect::text
