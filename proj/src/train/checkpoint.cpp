#include "affect/train/checkpoint.hpp"

#include <bit>
#include <cstring>

#include "affect/common.hpp"
#include "affect/error.hpp"

namespace affect::train {
namespace {

constexpr char kMagic[4] = {'M', 'T', 'A', 'F'};

template <typename U>
void put_le(std::string& out, U value) {
    for (std::size_t i = 0; i < sizeof(U); ++i) {
        out.push_back(static_cast<char>((value >> (8 * i)) & 0xff));
    }
}

template <typename U>
U get_le(std::string_view bytes, std::size_t pos) {
    U value = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) {
        value |= static_cast<U>(static_cast<unsigned char>(bytes[pos + i])) << (8 * i);
    }
    return value;
}

} // namespace

std::string serialize_checkpoint(const Checkpoint& ckpt) {
    nlohmann::json manifest = nlohmann::json::array();
    std::size_t offset = 0;
    ckpt.params.for_each([&](const std::string& name, const nn::Tensor& t) {
        manifest.push_back({{"name", name}, {"shape", {t.rows, t.cols}}, {"offset", offset}});
        offset += t.size() * sizeof(double);
    });
    nlohmann::json header = {
        {"config", to_json(ckpt.config)},
        {"vocab_hash", ckpt.vocab_hash},
        {"best_metric", ckpt.best_metric ? nlohmann::json(*ckpt.best_metric) : nlohmann::json(nullptr)},
        {"best_epoch", ckpt.best_epoch},
        {"seed", ckpt.seed},
        {"tensors", manifest},
        {"data_bytes", offset},
    };
    const std::string text = header.dump();

    std::string out(kMagic, sizeof(kMagic));
    put_le<std::uint32_t>(out, ckpt.format_version);
    put_le<std::uint64_t>(out, text.size());
    out += text;
    out.reserve(out.size() + offset);
    ckpt.params.for_each([&](const std::string&, const nn::Tensor& t) {
        for (double d : t.data) put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(d));
    });
    return out;
}

Checkpoint deserialize_checkpoint(std::string_view bytes) {
    if (bytes.size() < 16 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
        throw FormatError("not a checkpoint file (bad magic)");
    }
    const auto version = get_le<std::uint32_t>(bytes, 4);
    if (version != kCheckpointVersion) {
        throw FormatError("unsupported checkpoint version " + std::to_string(version));
    }
    const auto header_len = get_le<std::uint64_t>(bytes, 8);
    if (header_len > bytes.size() - 16) {
        throw FormatError("corrupt checkpoint: truncated header");
    }
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(bytes.substr(16, header_len));
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("corrupt checkpoint header: ") + e.what());
    }

    Checkpoint ckpt;
    ckpt.format_version = version;
    std::size_t data_bytes = 0;
    try {
        ckpt.config = from_json(header.at("config"));
        ckpt.vocab_hash = header.at("vocab_hash").get<std::string>();
        if (!header.at("best_metric").is_null()) ckpt.best_metric = header.at("best_metric").get<double>();
        ckpt.best_epoch = header.at("best_epoch").get<int>();
        ckpt.seed = header.at("seed").get<std::uint64_t>();
        data_bytes = header.at("data_bytes").get<std::size_t>();
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("corrupt checkpoint header: ") + e.what());
    } catch (const DataError& e) {
        throw FormatError(std::string("corrupt checkpoint config: ") + e.what());
    }

    const std::size_t data_start = 16 + header_len;
    if (bytes.size() - data_start != data_bytes) {
        throw FormatError("corrupt checkpoint: expected " + std::to_string(data_bytes) + " data bytes, found " +
                          std::to_string(bytes.size() - data_start));
    }
    try {
        ckpt.params = nn::zero_parameters(ckpt.config.encoder);
    } catch (const DataError& e) {
        throw FormatError(std::string("corrupt checkpoint config: ") + e.what());
    }
    std::size_t index = 0;
    std::string problem;
    try {
    const auto& manifest = header.at("tensors");
    ckpt.params.for_each([&](const std::string& name, nn::Tensor& t) {
        if (!problem.empty()) return;
        if (index >= manifest.size()) {
            problem = "manifest lacks " + name;
            return;
        }
        const auto& entry = manifest[index++];
        const auto shape = entry.at("shape").get<std::vector<std::size_t>>();
        const auto offset = entry.at("offset").get<std::size_t>();
        if (entry.at("name").get<std::string>() != name || shape.size() != 2 || shape[0] != t.rows ||
            shape[1] != t.cols || offset + t.size() * sizeof(double) > data_bytes) {
            problem = "manifest entry for " + name + " does not match the architecture";
            return;
        }
        for (std::size_t i = 0; i < t.size(); ++i) {
            t.data[i] = std::bit_cast<double>(get_le<std::uint64_t>(bytes, data_start + offset + i * sizeof(double)));
        }
    });
    if (problem.empty() && index != manifest.size()) problem = "manifest has extra tensors";
    } catch (const nlohmann::json::exception& e) {
        problem = e.what();
    }
    if (!problem.empty()) throw FormatError("corrupt checkpoint: " + problem);
    return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
    write_file(path, serialize_checkpoint(ckpt));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) { return deserialize_checkpoint(read_file(path)); }

} // namespace affect::train
