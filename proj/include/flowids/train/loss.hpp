#pragma once

#include <cstdint>
#include <vector>

#include "flowids/util.hpp"

namespace flowids {

template <typename T>
struct BceResult {
    T loss = T(0);
    std::vector<T> d_prob;
};

// Mean binary cross-entropy with probabilities clipped to [1e-7, 1-1e-7];
// the gradient is evaluated at the clipped value.
template <typename T>
BceResult<T> bce_loss(const std::vector<T>& probs, const std::vector<uint8_t>& labels) {
    if (probs.size() != labels.size())
        throw Error("bce_loss: " + std::to_string(probs.size()) + " probabilities vs " +
                    std::to_string(labels.size()) + " labels");
    if (probs.empty()) throw Error("bce_loss: empty batch");

    constexpr double kClip = 1e-7;
    const double inv_n = 1.0 / static_cast<double>(probs.size());

    BceResult<T> r;
    r.d_prob.resize(probs.size());
    double total = 0.0;
    for (size_t i = 0; i < probs.size(); ++i) {
        if (labels[i] > 1) throw Error("bce_loss: label must be 0 or 1");
        const double p = std::min(std::max(static_cast<double>(probs[i]), kClip), 1.0 - kClip);
        const double y = labels[i];
        total -= y * std::log(p) + (1.0 - y) * std::log(1.0 - p);
        r.d_prob[i] = static_cast<T>(-inv_n * (y / p - (1.0 - y) / (1.0 - p)));
    }
    r.loss = static_cast<T>(total * inv_n);
    return r;
}

}  // namespace flowids
