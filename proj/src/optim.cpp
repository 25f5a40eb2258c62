#include "affect/optim.hpp"

#include <cmath>
#include <vector>

#include "affect/error.hpp"

namespace affect::optim {

void AdamWConfig::validate() const {
    if (!(lr > 0.0)) throw DataError("AdamW lr must be positive");
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
        throw DataError("AdamW betas must lie in [0,1)");
    }
    if (!(eps > 0.0)) throw DataError("AdamW eps must be positive");
    if (!(weight_decay >= 0.0)) throw DataError("AdamW weight_decay must be non-negative");
}

OptimState init_state(const nn::Parameters& params) {
    return OptimState{nn::zeros_like(params), nn::zeros_like(params), 0};
}

void step(nn::Parameters& params, const nn::Parameters& grads, OptimState& state, const AdamWConfig& cfg,
          const kernels::KernelTable& kernels) {
    std::vector<nn::Tensor*> p_list, m_list, v_list;
    std::vector<const nn::Tensor*> g_list;
    std::vector<std::string> names;
    params.for_each([&](const std::string& name, nn::Tensor& t) {
        names.push_back(name);
        p_list.push_back(&t);
    });
    grads.for_each([&](const std::string&, const nn::Tensor& t) { g_list.push_back(&t); });
    state.m.for_each([&](const std::string&, nn::Tensor& t) { m_list.push_back(&t); });
    state.v.for_each([&](const std::string&, nn::Tensor& t) { v_list.push_back(&t); });
    if (g_list.size() != p_list.size() || m_list.size() != p_list.size() || v_list.size() != p_list.size()) {
        throw Error("AdamW: parameter, gradient and state layouts differ");
    }
    for (std::size_t i = 0; i < p_list.size(); ++i) {
        if (!p_list[i]->same_shape(*g_list[i]) || !p_list[i]->same_shape(*m_list[i]) ||
            !p_list[i]->same_shape(*v_list[i])) {
            throw Error("AdamW: shape mismatch on " + names[i]);
        }
        for (double g : g_list[i]->data) {
            if (!std::isfinite(g)) throw NumericError("non-finite gradient in " + names[i]);
        }
    }

    state.t += 1;
    const double t = static_cast<double>(state.t);
    const kernels::AdamWCoeffs coeffs{cfg.lr,
                                      cfg.beta1,
                                      cfg.beta2,
                                      cfg.eps,
                                      cfg.weight_decay,
                                      1.0 - std::pow(cfg.beta1, t),
                                      1.0 - std::pow(cfg.beta2, t)};
    for (std::size_t i = 0; i < p_list.size(); ++i) {
        kernels.adamw(p_list[i]->data.data(), g_list[i]->data.data(), m_list[i]->data.data(),
                      v_list[i]->data.data(), p_list[i]->size(), coeffs);
    }
}

} // namespace affect::optim
