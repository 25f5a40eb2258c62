#include "affect/train/predictions.hpp"

#include <cmath>
#include <sstream>

#include "affect/common.hpp"
#include "affect/error.hpp"

namespace affect::train {

data::EmotionLabel argmax_label(const ClassScores& scores) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < scores.size(); ++c) {
        if (scores[c] > scores[best]) best = c;
    }
    return static_cast<data::EmotionLabel>(best);
}

namespace {

std::string regression_tsv(const RegressionPredictions& p) {
    std::ostringstream os;
    os << "id";
    if (p.empathy) os << "\tempathy";
    if (p.distress) os << "\tdistress";
    os << '\n';
    for (std::size_t i = 0; i < p.ids.size(); ++i) {
        os << escape_field(p.ids[i]);
        if (p.empathy) os << '\t' << format_double((*p.empathy)[i]);
        if (p.distress) os << '\t' << format_double((*p.distress)[i]);
        os << '\n';
    }
    return os.str();
}

std::string classification_tsv(const ClassificationPredictions& p) {
    std::ostringstream os;
    os << "id";
    for (auto name : data::kEmotionNames) os << "\tp_" << name;
    os << "\tlabel\n";
    for (std::size_t i = 0; i < p.ids.size(); ++i) {
        os << escape_field(p.ids[i]);
        for (double v : p.probs[i]) os << '\t' << format_double(v);
        os << '\t' << data::to_string(p.labels[i]) << '\n';
    }
    return os.str();
}

double parse_value(const std::string& field, std::size_t line) {
    double v = 0.0;
    if (!parse_double(trim(field), v) || std::isnan(v)) {
        throw RowError(line, "not a number: '" + field + "'");
    }
    return v;
}

} // namespace

std::string to_tsv(const Predictions& predictions) {
    return std::visit(
        [](const auto& p) {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, RegressionPredictions>) {
                return regression_tsv(p);
            } else {
                return classification_tsv(p);
            }
        },
        predictions);
}

Predictions parse_predictions(std::string_view contents) {
    std::istringstream in{std::string(contents)};
    std::string line;
    if (!std::getline(in, line)) throw FormatError("prediction file is empty");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto header = split_tabs(line);
    if (header.empty() || header[0] != "id") throw FormatError("prediction header must start with 'id'");

    std::vector<std::string> expected_cls{"id"};
    for (auto name : data::kEmotionNames) expected_cls.push_back("p_" + std::string(name));
    expected_cls.push_back("label");

    std::size_t line_no = 1;
    if (header == expected_cls) {
        ClassificationPredictions p;
        while (std::getline(in, line)) {
            ++line_no;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.empty()) continue;
            const auto f = split_tabs(line);
            if (f.size() != header.size()) throw RowError(line_no, "wrong field count");
            ClassScores s{};
            for (std::size_t c = 0; c < s.size(); ++c) s[c] = parse_value(f[c + 1], line_no);
            const auto label = data::parse_emotion(f.back());
            if (!label) throw RowError(line_no, "unknown label '" + f.back() + "'");
            p.ids.push_back(unescape_field(f[0]));
            p.probs.push_back(s);
            p.labels.push_back(*label);
        }
        return p;
    }

    RegressionPredictions p;
    int emp = -1, dis = -1;
    for (std::size_t c = 1; c < header.size(); ++c) {
        if (header[c] == "empathy" && emp < 0) emp = static_cast<int>(c);
        else if (header[c] == "distress" && dis < 0) dis = static_cast<int>(c);
        else throw FormatError("unexpected prediction column '" + header[c] + "'");
    }
    if (emp < 0 && dis < 0) throw FormatError("prediction file has no score columns");
    if (emp >= 0) p.empathy.emplace();
    if (dis >= 0) p.distress.emplace();
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto f = split_tabs(line);
        if (f.size() != header.size()) throw RowError(line_no, "wrong field count");
        p.ids.push_back(unescape_field(f[0]));
        if (emp >= 0) p.empathy->push_back(parse_value(f[static_cast<std::size_t>(emp)], line_no));
        if (dis >= 0) p.distress->push_back(parse_value(f[static_cast<std::size_t>(dis)], line_no));
    }
    return p;
}

void save_predictions(const Predictions& predictions, const std::filesystem::path& path) {
    write_file(path, to_tsv(predictions));
}

Predictions load_predictions(const std::filesystem::path& path) { return parse_predictions(read_file(path)); }

} // namespace affect::train
