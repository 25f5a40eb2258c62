#include "affect/data.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_set>

#include "affect/common.hpp"
#include "affect/error.hpp"

namespace affect::data {

EmotionLabel label_from_code(int c) {
    if (c < 0 || c >= static_cast<int>(kNumEmotions)) {
        throw DataError("emotion code out of range: " + std::to_string(c));
    }
    return static_cast<EmotionLabel>(c);
}

std::string_view to_string(EmotionLabel label) { return kEmotionNames[static_cast<std::size_t>(code(label))]; }

std::optional<EmotionLabel> parse_emotion(std::string_view text) {
    const std::string lowered = to_lower(trim(text));
    for (std::size_t i = 0; i < kNumEmotions; ++i) {
        if (lowered == kEmotionNames[i]) {
            return static_cast<EmotionLabel>(i);
        }
    }
    return std::nullopt;
}

std::string_view to_string(Split split) {
    switch (split) {
    case Split::train: return "train";
    case Split::dev: return "dev";
    case Split::test: return "test";
    case Split::pool: return "pool";
    case Split::derived: return "derived";
    }
    return "unknown";
}

std::optional<Split> parse_split(std::string_view text) {
    for (Split s : {Split::train, Split::dev, Split::test, Split::pool, Split::derived}) {
        if (to_lower(text) == to_string(s)) {
            return s;
        }
    }
    return std::nullopt;
}

namespace {

struct Layout {
    std::string_view text_column;
    bool scores;        // empathy/distress columns are interpreted
    std::string_view default_id_prefix;
};

std::vector<std::string_view> split_lines(std::string_view contents) {
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    while (start < contents.size()) {
        std::size_t end = contents.find('\n', start);
        if (end == std::string_view::npos) {
            end = contents.size();
        }
        std::string_view line = contents.substr(start, end - start);
        if (!line.empty() && line.back() == '\r') {
            line.remove_suffix(1);
        }
        lines.push_back(line);
        start = end + 1;
    }
    return lines;
}

double parse_score(std::string_view field, std::string_view column, std::size_t line) {
    double value = 0.0;
    const std::string t = trim(field);
    if (!parse_double(t, value) || !std::isfinite(value)) {
        throw RowError(line, std::string(column) + " is not a number: '" + t + "'");
    }
    if (value < kScoreMin || value > kScoreMax) {
        throw RowError(line, std::string(column) + " " + t + " outside range [1,7]");
    }
    return value;
}

Dataset parse_table(std::string_view contents, Split split, const Layout& layout) {
    if (contents.size() >= 3 && contents.substr(0, 3) == "\xEF\xBB\xBF") {
        contents.remove_prefix(3);
    }
    const auto lines = split_lines(contents);
    if (lines.empty() || trim(lines[0]).empty()) {
        throw FormatError("missing header line");
    }
    const auto header = split_tabs(lines[0]);

    int text_col = -1, id_col = -1, emp_col = -1, dis_col = -1, emo_col = -1;
    std::unordered_set<std::string> seen;
    for (std::size_t c = 0; c < header.size(); ++c) {
        const std::string name = trim(header[c]);
        if (!seen.insert(name).second) {
            throw FormatError("duplicate column '" + name + "' in header");
        }
        const int ci = static_cast<int>(c);
        if (name == layout.text_column) text_col = ci;
        else if (name == "id") id_col = ci;
        else if (name == "emotion") emo_col = ci;
        else if (layout.scores && name == "empathy") emp_col = ci;
        else if (layout.scores && name == "distress") dis_col = ci;
    }
    if (text_col < 0) {
        throw FormatError("header lacks required column '" + std::string(layout.text_column) + "'");
    }
    if (!layout.scores && emo_col < 0) {
        throw FormatError("header lacks required column 'emotion'");
    }

    Dataset out;
    out.split = split;
    std::unordered_set<std::string> ids;
    for (std::size_t li = 1; li < lines.size(); ++li) {
        const std::size_t line_no = li + 1;
        if (li + 1 == lines.size() && lines[li].empty()) {
            break;  // trailing newline
        }
        const auto fields = split_tabs(lines[li]);
        if (fields.size() != header.size()) {
            throw RowError(line_no, "expected " + std::to_string(header.size()) + " fields, found " +
                                        std::to_string(fields.size()));
        }
        EssayRecord rec;
        for (std::size_t c = 0; c < fields.size(); ++c) {
            const int ci = static_cast<int>(c);
            const std::string& f = fields[c];
            if (ci == text_col) {
                rec.text = unescape_field(f);
            } else if (ci == id_col) {
                rec.id = unescape_field(f);
            } else if (ci == emp_col) {
                if (!trim(f).empty()) rec.empathy = parse_score(f, "empathy", line_no);
            } else if (ci == dis_col) {
                if (!trim(f).empty()) rec.distress = parse_score(f, "distress", line_no);
            } else if (ci == emo_col) {
                if (trim(f).empty()) {
                    if (!layout.scores) throw RowError(line_no, "missing emotion label");
                } else {
                    rec.emotion = parse_emotion(f);
                    if (!rec.emotion) throw RowError(line_no, "unknown emotion '" + trim(f) + "'");
                }
            } else {
                rec.extras.emplace_back(trim(header[c]), unescape_field(f));
            }
        }
        if (trim(rec.text).empty()) {
            throw RowError(line_no, "empty " + std::string(layout.text_column));
        }
        if (id_col < 0) {
            rec.id = std::string(layout.default_id_prefix) + std::to_string(out.records.size());
        } else if (rec.id.empty()) {
            throw RowError(line_no, "empty id");
        }
        if (!ids.insert(rec.id).second) {
            throw RowError(line_no, "duplicate id '" + rec.id + "'");
        }
        out.records.push_back(std::move(rec));
    }
    return out;
}

} // namespace

Dataset parse_task_tsv(std::string_view contents, Split split) {
    return parse_table(contents, split, Layout{"essay", true, ""});
}

Dataset load_task_tsv(const std::filesystem::path& path, Split split) {
    return parse_task_tsv(read_file(path), split);
}

Dataset parse_pool_tsv(std::string_view contents) {
    return parse_table(contents, Split::pool, Layout{"text", false, "pool-"});
}

Dataset load_pool_tsv(const std::filesystem::path& path) { return parse_pool_tsv(read_file(path)); }

std::string to_tsv(const Dataset& dataset) {
    std::vector<std::string> extra_keys;
    for (const auto& r : dataset.records) {
        for (const auto& [k, v] : r.extras) {
            if (std::find(extra_keys.begin(), extra_keys.end(), k) == extra_keys.end()) {
                extra_keys.push_back(k);
            }
        }
    }
    std::ostringstream os;
    os << "id\tessay\tempathy\tdistress\temotion";
    for (const auto& k : extra_keys) os << '\t' << escape_field(k);
    os << '\n';
    for (const auto& r : dataset.records) {
        os << escape_field(r.id) << '\t' << escape_field(r.text) << '\t';
        if (r.empathy) os << format_double(*r.empathy);
        os << '\t';
        if (r.distress) os << format_double(*r.distress);
        os << '\t';
        if (r.emotion) os << to_string(*r.emotion);
        for (const auto& k : extra_keys) {
            os << '\t';
            for (const auto& [ek, ev] : r.extras) {
                if (ek == k) {
                    os << escape_field(ev);
                    break;
                }
            }
        }
        os << '\n';
    }
    return os.str();
}

void save_tsv(const Dataset& dataset, const std::filesystem::path& path) { write_file(path, to_tsv(dataset)); }

Histogram class_histogram(const Dataset& dataset) {
    Histogram h{};
    for (const auto& r : dataset.records) {
        if (!r.emotion) {
            throw DataError("record '" + r.id + "' has no emotion label");
        }
        ++h[static_cast<std::size_t>(code(*r.emotion))];
    }
    return h;
}

std::string histogram_csv(const Histogram& histogram) {
    std::ostringstream os;
    os << "class,count\n";
    for (std::size_t i = 0; i < kNumEmotions; ++i) {
        os << kEmotionNames[i] << ',' << histogram[i] << '\n';
    }
    return os.str();
}

void check_unique_ids(const Dataset& dataset) {
    std::unordered_set<std::string> ids;
    for (const auto& r : dataset.records) {
        if (!ids.insert(r.id).second) {
            throw DataError("duplicate id '" + r.id + "'");
        }
    }
}

} // namespace affect::data
