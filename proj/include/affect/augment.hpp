#pragma once

#include <cstddef>
#include <cstdint>

#include "affect/data.hpp"

namespace affect::augment {

enum class Scheme { balanced, random };

struct AugmentationSpec {
    Scheme scheme = Scheme::balanced;
    std::size_t total_target = 2800;  // balanced only; must be a multiple of 7
    std::size_t sample_count = 1000;  // random only
    std::uint64_t seed = 0;
};

/// Balanced augmentation (BA).
///
/// Produces exactly `total_target / 7` records per class. Classes above the
/// per-class target are downsampled without replacement; classes below it keep
/// every base record and are topped up from the same pool class, without
/// replacement unless that pool class runs out (then the output is flagged with
/// `with_replacement_used`). Output order: the kept base records in their
/// original order, then pool records in selection order. Classes are processed
/// in canonical order from a single Rng seeded with `spec.seed`.
///
/// Pool records whose id collides with an id already in the output get a
/// `#<n>` suffix.
data::Dataset balanced_augment(const data::Dataset& base, const data::Dataset& pool,
                               const AugmentationSpec& spec);

/// Random augmentation (RA): `base` in order followed by `sample_count` distinct
/// pool records drawn uniformly.
data::Dataset random_augment(const data::Dataset& base, const data::Dataset& pool,
                             const AugmentationSpec& spec);

data::Dataset apply(const data::Dataset& base, const data::Dataset& pool, const AugmentationSpec& spec);

} // namespace affect::augment
