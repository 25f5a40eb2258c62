#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace affect {

/// Seeded random source used for every stochastic choice in the project.
///
/// The bit stream is std::mt19937_64 (its output sequence is fixed by the C++
/// standard). Bounded integers and reals are derived from raw 64-bit outputs
/// with fixed formulas instead of std::*_distribution, whose algorithms are
/// implementation-defined, so sampling is reproducible across toolchains.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform integer in [0, bound). Rejection sampling, no modulo bias.
    std::uint64_t uniform_below(std::uint64_t bound);

    /// Uniform real in [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

private:
    std::mt19937_64 engine_;
};

/// SplitMix64 finalizer.
std::uint64_t splitmix64(std::uint64_t x);

/// Derives an independent stream seed from (seed, stream), e.g. (seed, epoch).
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

/// In-place Fisher-Yates shuffle.
template <typename T>
void shuffle(std::span<T> items, Rng& rng) {
    for (std::size_t i = items.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng.uniform_below(i));
        std::swap(items[i - 1], items[j]);
    }
}

/// `count` distinct indices from [0, n) in selection order (partial Fisher-Yates).
std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t count, Rng& rng);

} // namespace affect
