#include "affect/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "affect/error.hpp"
#include "affect/nn/losses.hpp"

namespace affect::ensemble {
namespace {

double sorted_sum(std::vector<double>& values) {
    std::sort(values.begin(), values.end());
    double s = 0.0;
    for (double v : values) s += v;
    return s;
}

// Mean as min + mean of offsets from the min: exact when every value is equal,
// which (k * x) / k is not in floating point.
double sorted_mean(std::vector<double>& values) {
    std::sort(values.begin(), values.end());
    const double lo = values.front();
    double s = 0.0;
    for (double v : values) s += v - lo;
    return lo + s / static_cast<double>(values.size());
}

void check_ids(const std::vector<std::string>& reference, const std::vector<std::string>& other) {
    const std::size_t n = std::min(reference.size(), other.size());
    for (std::size_t i = 0; i < n; ++i) {
        if (reference[i] != other[i]) {
            throw DataError("member ids misaligned at row " + std::to_string(i) + ": '" + reference[i] + "' vs '" +
                            other[i] + "'");
        }
    }
    if (reference.size() != other.size()) {
        const std::string& id = reference.size() > n ? reference[n] : other[n];
        throw DataError("member ids misaligned: '" + id + "' missing from one member");
    }
}

} // namespace

std::string_view to_string(ScoreSpace space) { return space == ScoreSpace::logit ? "logit" : "probability"; }

std::optional<ScoreSpace> parse_score_space(std::string_view name) {
    if (name == "probability") return ScoreSpace::probability;
    if (name == "logit") return ScoreSpace::logit;
    return std::nullopt;
}

std::vector<double> ensemble_regression(std::span<const std::vector<double>> members) {
    if (members.empty()) throw DataError("ensemble needs at least one member");
    const std::size_t n = members[0].size();
    for (const auto& m : members) {
        if (m.size() != n) throw DataError("ensemble members differ in length");
    }
    std::vector<double> out(n);
    std::vector<double> column(members.size());
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < members.size(); ++k) column[k] = members[k][i];
        out[i] = sorted_mean(column);
    }
    return out;
}

std::vector<ClassRow> ensemble_classification(std::span<const std::vector<ClassScores>> members, ScoreSpace space) {
    if (members.empty()) throw DataError("ensemble needs at least one member");
    const std::size_t n = members[0].size();
    for (std::size_t k = 0; k < members.size(); ++k) {
        if (members[k].size() != n) throw DataError("ensemble members differ in length");
        for (std::size_t i = 0; i < n; ++i) {
            double total = 0.0;
            for (double v : members[k][i]) {
                if (std::isnan(v) || (space == ScoreSpace::probability && (v < 0.0 || !std::isfinite(v)))) {
                    throw DataError("member " + std::to_string(k) + " row " + std::to_string(i) +
                                    " is not a valid score vector");
                }
                total += v;
            }
            if (space == ScoreSpace::probability && std::abs(total - 1.0) > 1e-6) {
                throw DataError("member " + std::to_string(k) + " row " + std::to_string(i) +
                                " is not a probability vector (sum " + std::to_string(total) + ")");
            }
        }
    }
    std::vector<ClassRow> rows(n);
    std::vector<double> column(members.size());
    for (std::size_t i = 0; i < n; ++i) {
        ClassRow& row = rows[i];
        for (std::size_t c = 0; c < data::kNumEmotions; ++c) {
            for (std::size_t k = 0; k < members.size(); ++k) column[k] = members[k][i][c];
            row.sum[c] = sorted_sum(column);
            if (space == ScoreSpace::probability) row.normalized[c] = sorted_mean(column);
        }
        row.label = train::argmax_label(row.sum);
        if (space == ScoreSpace::logit) {
            const auto p = nn::softmax(row.sum);
            std::copy(p.begin(), p.end(), row.normalized.begin());
        }
    }
    return rows;
}

train::RegressionPredictions ensemble_regression(std::span<const train::RegressionPredictions> members) {
    if (members.empty()) throw DataError("ensemble needs at least one member");
    const auto& first = members[0];
    for (const auto& m : members) {
        check_ids(first.ids, m.ids);
        if (m.empathy.has_value() != first.empathy.has_value() || m.distress.has_value() != first.distress.has_value()) {
            throw DataError("ensemble members carry different score columns");
        }
    }
    train::RegressionPredictions out;
    out.ids = first.ids;
    auto combine = [&](auto member_column) {
        std::vector<std::vector<double>> cols;
        for (const auto& m : members) cols.push_back(*(m.*member_column));
        return ensemble_regression(cols);
    };
    if (first.empathy) out.empathy = combine(&train::RegressionPredictions::empathy);
    if (first.distress) out.distress = combine(&train::RegressionPredictions::distress);
    return out;
}

ClassificationEnsemble ensemble_classification(std::span<const train::ClassificationPredictions> members,
                                               ScoreSpace space) {
    if (members.empty()) throw DataError("ensemble needs at least one member");
    std::vector<std::vector<ClassScores>> scores;
    for (const auto& m : members) {
        check_ids(members[0].ids, m.ids);
        std::vector<ClassScores> s = m.probs;
        if (space == ScoreSpace::logit) {
            for (auto& row : s) {
                for (double& v : row) v = std::log(v);
            }
        }
        scores.push_back(std::move(s));
    }
    ClassificationEnsemble out;
    out.ids = members[0].ids;
    out.rows = ensemble_classification(scores, space);
    out.space = space;
    return out;
}

train::ClassificationPredictions ClassificationEnsemble::predictions() const {
    train::ClassificationPredictions p;
    p.ids = ids;
    for (const auto& r : rows) {
        p.probs.push_back(r.normalized);
        p.labels.push_back(r.label);
    }
    return p;
}

} // namespace affect::ensemble
