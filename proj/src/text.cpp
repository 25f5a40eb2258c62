#include "affect/text.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <sstream>

#include "affect/common.hpp"
#include "affect/error.hpp"
#include "json.hpp"

namespace affect::text {
namespace {

bool is_punct(char c) { return std::ispunct(static_cast<unsigned char>(c)) != 0; }
bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

const std::string kReservedNames[kReserved] = {"[PAD]", "[UNK]", "[CLS]"};

} // namespace

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && is_space(text[i])) ++i;
        std::size_t j = i;
        while (j < text.size() && !is_space(text[j])) ++j;
        if (j > i) {
            std::string_view word = text.substr(i, j - i);
            std::size_t b = 0;
            std::size_t e = word.size();
            while (b < e && is_punct(word[b])) ++b;
            while (e > b && is_punct(word[e - 1])) --e;
            for (std::size_t k = 0; k < b; ++k) out.emplace_back(1, word[k]);
            if (e > b) out.push_back(to_lower(word.substr(b, e - b)));
            for (std::size_t k = std::max(e, b); k < word.size(); ++k) out.emplace_back(1, word[k]);
        }
        i = j;
    }
    return out;
}

Vocab::Vocab() {
    for (const auto& name : kReservedNames) append(name);
}

void Vocab::append(std::string token) {
    index_.emplace(token, static_cast<int>(tokens_.size()));
    tokens_.push_back(std::move(token));
}

int Vocab::id(std::string_view token) const {
    const auto it = index_.find(std::string(token));
    if (it == index_.end() || it->second < static_cast<int>(kReserved)) {
        return kUnk;
    }
    return it->second;
}

const std::string& Vocab::token(int id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) {
        throw DataError("token id out of range: " + std::to_string(id));
    }
    return tokens_[static_cast<std::size_t>(id)];
}

std::string Vocab::serialize() const {
    nlohmann::json header = {
        {"max_size", max_size_},
        {"min_freq", min_freq_},
        {"reserved", {{"pad", kPad}, {"unk", kUnk}, {"cls", kCls}}},
        {"size", tokens_.size()},
    };
    std::ostringstream os;
    os << header.dump() << '\n';
    for (std::size_t i = 0; i < tokens_.size(); ++i) {
        os << tokens_[i] << '\t' << i << '\n';
    }
    return os.str();
}

Vocab Vocab::deserialize(std::string_view contents) {
    std::istringstream in{std::string(contents)};
    std::string line;
    if (!std::getline(in, line)) {
        throw FormatError("vocab file is empty");
    }
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("vocab header is not JSON: ") + e.what());
    }
    Vocab v;
    v.tokens_.clear();
    v.index_.clear();
    try {
        v.max_size_ = header.at("max_size").get<std::size_t>();
        v.min_freq_ = header.at("min_freq").get<std::size_t>();
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("vocab header: ") + e.what());
    }
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto fields = split_tabs(line);
        if (fields.size() != 2 || fields[1] != std::to_string(v.tokens_.size())) {
            throw RowError(line_no, "vocab entry must be `token<TAB>id` with contiguous ids");
        }
        v.append(fields[0]);
    }
    if (v.tokens_.size() < kReserved || !std::equal(v.tokens_.begin(), v.tokens_.begin() + kReserved,
                                                    std::begin(kReservedNames))) {
        throw FormatError("vocab lacks the reserved entries");
    }
    if (header.contains("size") && header["size"].get<std::size_t>() != v.tokens_.size()) {
        throw FormatError("vocab size does not match header");
    }
    return v;
}

void Vocab::save(const std::filesystem::path& path) const { write_file(path, serialize()); }

Vocab Vocab::load(const std::filesystem::path& path) { return deserialize(read_file(path)); }

std::string Vocab::hash() const { return hex64(fnv1a64(serialize())); }

Vocab build_vocab(const data::Dataset& train, std::size_t max_size, std::size_t min_freq) {
    if (max_size < kReserved) {
        throw DataError("vocab max_size " + std::to_string(max_size) + " cannot hold the 3 reserved ids");
    }
    if (min_freq == 0) {
        throw DataError("vocab min_freq must be positive");
    }
    if (train.empty()) {
        throw DataError("cannot build a vocabulary from an empty dataset");
    }
    std::map<std::string, std::size_t> counts;
    for (const auto& r : train.records) {
        for (auto& tok : tokenize(r.text)) ++counts[std::move(tok)];
    }
    std::vector<std::pair<std::string, std::size_t>> ranked;
    for (auto& [tok, n] : counts) {
        const bool reserved = std::find(std::begin(kReservedNames), std::end(kReservedNames), tok) !=
                              std::end(kReservedNames);
        if (n >= min_freq && !reserved) ranked.emplace_back(tok, n);
    }
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    Vocab v;
    v.max_size_ = max_size;
    v.min_freq_ = min_freq;
    for (auto& [tok, n] : ranked) {
        if (v.size() >= max_size) break;
        v.append(tok);
    }
    return v;
}

TokenSequence encode(std::string_view text, const Vocab& vocab, std::size_t max_len) {
    if (max_len < 2) {
        throw DataError("max_len must be at least 2");
    }
    TokenSequence seq;
    seq.ids.assign(max_len, kPad);
    seq.ids[0] = kCls;
    std::size_t pos = 1;
    for (const auto& tok : tokenize(text)) {
        if (pos >= max_len) break;
        seq.ids[pos++] = vocab.id(tok);
    }
    seq.true_length = pos;
    return seq;
}

std::vector<std::string> decode(const TokenSequence& seq, const Vocab& vocab) {
    std::vector<std::string> out;
    for (std::size_t i = 1; i < seq.true_length && i < seq.ids.size(); ++i) {
        out.push_back(vocab.token(seq.ids[i]));
    }
    return out;
}

} // namespace affect::text
