#include "affect/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_map>

#include "affect/common.hpp"
#include "affect/error.hpp"

namespace affect::metrics {
namespace {

void check_labels(std::span<const int> preds, std::span<const int> golds, std::size_t k) {
    if (preds.size() != golds.size()) {
        throw DataError("label vectors differ in length: " + std::to_string(preds.size()) + " vs " +
                        std::to_string(golds.size()));
    }
    for (std::span<const int> s : {preds, golds}) {
        for (int v : s) {
            if (v < 0 || static_cast<std::size_t>(v) >= k) {
                throw DataError("label out of range: " + std::to_string(v));
            }
        }
    }
}

} // namespace

double pearson(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw DataError("pearson: vectors differ in length");
    if (x.size() < 2) throw DataError("pearson: need at least two points");
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) {
        throw DataError("pearson: degenerate variance (constant input)");
    }
    const double r = (sxy / n) / (std::sqrt(sxx / n) * std::sqrt(syy / n));
    return std::clamp(r, -1.0, 1.0);
}

double accuracy(std::span<const int> preds, std::span<const int> golds) {
    if (preds.size() != golds.size() || preds.empty()) {
        throw DataError("accuracy: need equal, nonempty label vectors");
    }
    std::size_t hit = 0;
    for (std::size_t i = 0; i < preds.size(); ++i) hit += preds[i] == golds[i] ? 1 : 0;
    return static_cast<double>(hit) / static_cast<double>(preds.size());
}

F1Result macro_f1(std::span<const int> preds, std::span<const int> golds, std::size_t k) {
    if (preds.empty()) throw DataError("macro_f1: empty input");
    check_labels(preds, golds, k);
    std::vector<std::size_t> tp(k, 0), fp(k, 0), fn(k, 0);
    for (std::size_t i = 0; i < preds.size(); ++i) {
        const auto p = static_cast<std::size_t>(preds[i]);
        const auto g = static_cast<std::size_t>(golds[i]);
        if (p == g) {
            ++tp[p];
        } else {
            ++fp[p];
            ++fn[g];
        }
    }
    F1Result r;
    r.per_class.resize(k);
    double sum = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
        const double precision = tp[c] + fp[c] == 0 ? 0.0 : static_cast<double>(tp[c]) / static_cast<double>(tp[c] + fp[c]);
        const double recall = tp[c] + fn[c] == 0 ? 0.0 : static_cast<double>(tp[c]) / static_cast<double>(tp[c] + fn[c]);
        r.per_class[c] = precision + recall == 0.0 ? 0.0 : 2.0 * precision * recall / (precision + recall);
        sum += r.per_class[c];
    }
    r.macro = sum / static_cast<double>(k);
    return r;
}

Confusion confusion(std::span<const int> preds, std::span<const int> golds, std::size_t k) {
    check_labels(preds, golds, k);
    Confusion c;
    c.counts.assign(k, std::vector<std::size_t>(k, 0));
    c.normalized.assign(k, std::vector<double>(k, 0.0));
    for (std::size_t i = 0; i < preds.size(); ++i) {
        ++c.counts[static_cast<std::size_t>(golds[i])][static_cast<std::size_t>(preds[i])];
    }
    for (std::size_t g = 0; g < k; ++g) {
        std::size_t row = 0;
        for (std::size_t n : c.counts[g]) row += n;
        if (row == 0) continue;
        for (std::size_t p = 0; p < k; ++p) {
            c.normalized[g][p] = static_cast<double>(c.counts[g][p]) / static_cast<double>(row);
        }
    }
    return c;
}

nlohmann::json to_json(const EvalReport& report) {
    auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
    nlohmann::json j;
    j["task"] = report.task == ReportTask::regression ? "regression" : "classification";
    j["n"] = report.n;
    j["pearson_empathy"] = opt(report.pearson_empathy);
    j["pearson_distress"] = opt(report.pearson_distress);
    j["pearson_avg"] = opt(report.pearson_avg);
    j["accuracy"] = opt(report.accuracy);
    j["macro_f1"] = opt(report.macro_f1);
    j["per_class_f1"] = report.per_class_f1.empty() ? nlohmann::json(nullptr) : nlohmann::json(report.per_class_f1);
    j["confusion"] = report.confusion ? nlohmann::json(report.confusion->counts) : nlohmann::json(nullptr);
    j["confusion_normalized"] =
        report.confusion ? nlohmann::json(report.confusion->normalized) : nlohmann::json(nullptr);
    return j;
}

namespace {

std::vector<std::size_t> align(const std::vector<std::string>& ids, const data::Dataset& gold) {
    if (ids.size() != gold.size()) {
        throw DataError("prediction count " + std::to_string(ids.size()) + " does not match gold count " +
                        std::to_string(gold.size()));
    }
    std::unordered_map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < gold.size(); ++i) index.emplace(gold.records[i].id, i);
    std::vector<std::size_t> out;
    out.reserve(ids.size());
    for (const auto& id : ids) {
        const auto it = index.find(id);
        if (it == index.end()) throw DataError("prediction id '" + id + "' not found in gold data");
        out.push_back(it->second);
    }
    return out;
}

EvalReport regression_report(const train::RegressionPredictions& p, const data::Dataset& gold) {
    const auto rows = align(p.ids, gold);
    EvalReport r;
    r.task = ReportTask::regression;
    r.n = rows.size();
    auto score = [&](const std::vector<double>& pred, std::optional<double> data::EssayRecord::*field,
                     const char* name) {
        std::vector<double> g;
        for (std::size_t row : rows) {
            const auto& rec = gold.records[row];
            if (!(rec.*field)) throw DataError("gold record '" + rec.id + "' has no " + name + " score");
            g.push_back(*(rec.*field));
        }
        return pearson(pred, g);
    };
    if (p.empathy) r.pearson_empathy = score(*p.empathy, &data::EssayRecord::empathy, "empathy");
    if (p.distress) r.pearson_distress = score(*p.distress, &data::EssayRecord::distress, "distress");
    if (r.pearson_empathy && r.pearson_distress) r.pearson_avg = (*r.pearson_empathy + *r.pearson_distress) / 2.0;
    return r;
}

EvalReport classification_report(const train::ClassificationPredictions& p, const data::Dataset& gold) {
    const auto rows = align(p.ids, gold);
    std::vector<int> preds, golds;
    data::Dataset ordered;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& rec = gold.records[rows[i]];
        if (!rec.emotion) throw DataError("gold record '" + rec.id + "' has no emotion label");
        preds.push_back(data::code(p.labels[i]));
        golds.push_back(data::code(*rec.emotion));
        ordered.records.push_back(rec);
    }
    EvalReport r;
    r.task = ReportTask::classification;
    r.n = rows.size();
    if (rows.empty()) throw DataError("cannot evaluate an empty prediction set");
    const F1Result f1 = macro_f1(preds, golds);
    r.macro_f1 = f1.macro;
    r.per_class_f1 = f1.per_class;
    r.accuracy = accuracy(preds, golds);
    r.confusion = confusion(preds, golds);
    r.gold_histogram = data::class_histogram(ordered);
    return r;
}

} // namespace

EvalReport build_report(const train::Predictions& predictions, const data::Dataset& gold) {
    if (const auto* reg = std::get_if<train::RegressionPredictions>(&predictions)) {
        return regression_report(*reg, gold);
    }
    return classification_report(std::get<train::ClassificationPredictions>(predictions), gold);
}

std::string confusion_normalized_csv(const Confusion& c) {
    std::ostringstream os;
    os << "gold/pred";
    for (auto name : data::kEmotionNames) os << ',' << name;
    os << '\n';
    for (std::size_t g = 0; g < c.normalized.size(); ++g) {
        os << data::kEmotionNames[g];
        for (double v : c.normalized[g]) os << ',' << format_double(v);
        os << '\n';
    }
    return os.str();
}

std::string confusion_csv(const Confusion& c) {
    std::ostringstream os;
    os << "gold/pred";
    for (auto name : data::kEmotionNames) os << ',' << name;
    os << '\n';
    for (std::size_t g = 0; g < c.counts.size(); ++g) {
        os << data::kEmotionNames[g];
        for (std::size_t n : c.counts[g]) os << ',' << n;
        os << '\n';
    }
    return os.str();
}

} // namespace affect::metrics
