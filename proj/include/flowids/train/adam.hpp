#pragma once

#include <cmath>
#include <span>

#include "flowids/nn/params.hpp"
#include "flowids/util.hpp"

namespace flowids {

// Standard Adam hyperparameters; only the learning rate is tuned.
struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

template <typename T>
struct AdamState {
    std::vector<std::vector<T>> m;  // first moments, mirroring parameter blocks
    std::vector<std::vector<T>> v;  // second moments
    uint64_t step = 0;
    AdamConfig config;

    template <typename Params>
    static AdamState zeros_for(const Params& params) {
        AdamState s;
        for (auto block : params.blocks()) {
            s.m.emplace_back(block.size(), T(0));
            s.v.emplace_back(block.size(), T(0));
        }
        return s;
    }
};

// One bias-corrected update of a single block. `t` is the already-incremented
// step counter.
template <typename T>
void adam_update(std::span<T> theta, std::span<const T> grad, std::span<T> m, std::span<T> v,
                 uint64_t t, double lr, const AdamConfig& cfg) {
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
    for (size_t i = 0; i < theta.size(); ++i) {
        const double g = static_cast<double>(grad[i]);
        if (!std::isfinite(g)) throw Error("adam: non-finite gradient component");
        const double mi = cfg.beta1 * static_cast<double>(m[i]) + (1.0 - cfg.beta1) * g;
        const double vi = cfg.beta2 * static_cast<double>(v[i]) + (1.0 - cfg.beta2) * g * g;
        m[i] = static_cast<T>(mi);
        v[i] = static_cast<T>(vi);
        const double m_hat = mi / bc1;
        const double v_hat = vi / bc2;
        theta[i] = static_cast<T>(static_cast<double>(theta[i]) -
                                  lr * m_hat / (std::sqrt(v_hat) + cfg.epsilon));
    }
}

template <typename T>
void adam_step(nn::Parameters<T>& params, const nn::Parameters<T>& grads, AdamState<T>& state,
               double lr) {
    auto p_blocks = params.blocks();
    auto g_blocks = grads.blocks();
    if (p_blocks.size() != g_blocks.size() || p_blocks.size() != state.m.size())
        throw Error("adam_step: parameter/gradient/state block mismatch");
    ++state.step;
    for (size_t b = 0; b < p_blocks.size(); ++b) {
        if (p_blocks[b].size() != g_blocks[b].size())
            throw Error("adam_step: block " + std::to_string(b) + " shape mismatch");
        adam_update<T>(p_blocks[b], g_blocks[b], std::span<T>(state.m[b]),
                       std::span<T>(state.v[b]), state.step, lr, state.config);
    }
}

}  // namespace flowids
