#include "affect/augment.hpp"

#include <algorithm>
#include <string>
#include <unordered_set>

#include "affect/error.hpp"
#include "affect/rng.hpp"

namespace affect::augment {
namespace {

class IdAllocator {
public:
    explicit IdAllocator(const data::Dataset& base) {
        for (const auto& r : base.records) used_.insert(r.id);
    }
    void reserve(const std::string& id) { used_.insert(id); }
    std::string claim(const std::string& id) {
        if (used_.insert(id).second) return id;
        for (std::size_t n = 2;; ++n) {
            std::string candidate = id + "#" + std::to_string(n);
            if (used_.insert(candidate).second) return candidate;
        }
    }

private:
    std::unordered_set<std::string> used_;
};

std::array<std::vector<std::size_t>, data::kNumEmotions> by_class(const data::Dataset& d, const char* what) {
    std::array<std::vector<std::size_t>, data::kNumEmotions> groups;
    for (std::size_t i = 0; i < d.records.size(); ++i) {
        const auto& r = d.records[i];
        if (!r.emotion) {
            throw DataError(std::string(what) + " record '" + r.id + "' has no emotion label");
        }
        groups[static_cast<std::size_t>(data::code(*r.emotion))].push_back(i);
    }
    return groups;
}

} // namespace

data::Dataset balanced_augment(const data::Dataset& base, const data::Dataset& pool,
                               const AugmentationSpec& spec) {
    if (spec.scheme != Scheme::balanced) {
        throw DataError("balanced_augment requires scheme BA");
    }
    if (spec.total_target == 0 || spec.total_target % data::kNumEmotions != 0) {
        throw DataError("BA total " + std::to_string(spec.total_target) + " is not a positive multiple of 7");
    }
    const std::size_t per_class = spec.total_target / data::kNumEmotions;
    const auto base_groups = by_class(base, "base");
    const auto pool_groups = by_class(pool, "pool");

    Rng rng(spec.seed);
    std::vector<bool> keep(base.records.size(), false);
    std::vector<std::size_t> pool_picks;
    bool replaced = false;

    for (std::size_t c = 0; c < data::kNumEmotions; ++c) {
        const auto& members = base_groups[c];
        if (members.size() >= per_class) {
            for (std::size_t k : sample_without_replacement(members.size(), per_class, rng)) {
                keep[members[k]] = true;
            }
            continue;
        }
        for (std::size_t idx : members) keep[idx] = true;
        const std::size_t need = per_class - members.size();
        const auto& candidates = pool_groups[c];
        if (candidates.empty()) {
            throw DataError("pool has no records of class '" +
                            std::string(data::kEmotionNames[c]) + "' needed for balancing");
        }
        const std::size_t distinct = std::min(need, candidates.size());
        for (std::size_t k : sample_without_replacement(candidates.size(), distinct, rng)) {
            pool_picks.push_back(candidates[k]);
        }
        for (std::size_t extra = distinct; extra < need; ++extra) {
            pool_picks.push_back(candidates[static_cast<std::size_t>(rng.uniform_below(candidates.size()))]);
            replaced = true;
        }
    }

    data::Dataset out;
    out.split = data::Split::derived;
    out.with_replacement_used = replaced;
    IdAllocator ids{data::Dataset{}};
    for (std::size_t i = 0; i < base.records.size(); ++i) {
        if (keep[i]) {
            out.records.push_back(base.records[i]);
            ids.reserve(base.records[i].id);
        }
    }
    for (std::size_t idx : pool_picks) {
        data::EssayRecord rec = pool.records[idx];
        rec.id = ids.claim(rec.id);
        out.records.push_back(std::move(rec));
    }
    return out;
}

data::Dataset random_augment(const data::Dataset& base, const data::Dataset& pool,
                             const AugmentationSpec& spec) {
    if (spec.scheme != Scheme::random) {
        throw DataError("random_augment requires scheme RA");
    }
    if (spec.sample_count > pool.records.size()) {
        throw DataError("RA count " + std::to_string(spec.sample_count) + " exceeds pool size " +
                        std::to_string(pool.records.size()));
    }
    Rng rng(spec.seed);
    data::Dataset out;
    out.split = data::Split::derived;
    out.records = base.records;
    IdAllocator ids(base);
    for (std::size_t idx : sample_without_replacement(pool.records.size(), spec.sample_count, rng)) {
        data::EssayRecord rec = pool.records[idx];
        rec.id = ids.claim(rec.id);
        out.records.push_back(std::move(rec));
    }
    return out;
}

data::Dataset apply(const data::Dataset& base, const data::Dataset& pool, const AugmentationSpec& spec) {
    return spec.scheme == Scheme::balanced ? balanced_augment(base, pool, spec) : random_augment(base, pool, spec);
}

} // namespace affect::augment
