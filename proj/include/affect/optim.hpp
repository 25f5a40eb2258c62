#pragma once

#include <cstdint>

#include "affect/kernels.hpp"
#include "affect/nn/model.hpp"

namespace affect::optim {

struct AdamWConfig {
    double lr = 1e-5;
    double beta1 = 0.9;
    double beta2 = 0.99;
    double eps = 1e-6;
    double weight_decay = 0.0;

    void validate() const;
    bool operator==(const AdamWConfig&) const = default;
};

/// First/second moments per parameter tensor plus the step counter.
struct OptimState {
    nn::Parameters m;
    nn::Parameters v;
    std::uint64_t t = 0;
};

OptimState init_state(const nn::Parameters& params);

/// One AdamW update: t += 1; bias-corrected Adam step, then decoupled decay
/// lr * weight_decay * theta using the pre-update theta.
/// Throws NumericError naming the tensor if any gradient is NaN/Inf.
void step(nn::Parameters& params, const nn::Parameters& grads, OptimState& state, const AdamWConfig& cfg,
          const kernels::KernelTable& kernels = kernels::active());

} // namespace affect::optim
