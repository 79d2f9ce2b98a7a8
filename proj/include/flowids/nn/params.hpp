#pragma once

#include <cmath>
#include <span>

#include "flowids/nn/config.hpp"
#include "flowids/nn/tensor.hpp"
#include "flowids/rng.hpp"

namespace flowids::nn {

template <typename T>
struct ConvParams {
    Tensor<T> weight;  // [filters x in_channels x kernel]
    Tensor<T> bias;    // [filters]
};

// Gate rows packed i, f, g, o: rows [0,H) input, [H,2H) forget,
// [2H,3H) cell candidate, [3H,4H) output.
template <typename T>
struct LstmParams {
    Tensor<T> w;  // [4H x D]
    Tensor<T> u;  // [4H x H]
    Tensor<T> b;  // [4H]
};

template <typename T>
struct DenseParams {
    Tensor<T> weight;  // [units x in]
    Tensor<T> bias;    // [units]
};

template <typename T>
struct Parameters {
    std::vector<ConvParams<T>> conv;
    LstmParams<T> lstm;
    DenseParams<T> hidden;
    DenseParams<T> output;  // single logit: weight [1 x dense_units], bias [1]

    // Flat spans in the persisted order: conv blocks in depth order
    // (weight, bias), LSTM (W, U, b), hidden (W, b), output (w, b).
    std::vector<std::span<T>> blocks() {
        std::vector<std::span<T>> out;
        for (auto& c : conv) {
            out.emplace_back(c.weight.values);
            out.emplace_back(c.bias.values);
        }
        out.emplace_back(lstm.w.values);
        out.emplace_back(lstm.u.values);
        out.emplace_back(lstm.b.values);
        out.emplace_back(hidden.weight.values);
        out.emplace_back(hidden.bias.values);
        out.emplace_back(output.weight.values);
        out.emplace_back(output.bias.values);
        return out;
    }
    std::vector<std::span<const T>> blocks() const {
        std::vector<std::span<const T>> out;
        for (const auto& c : conv) {
            out.emplace_back(c.weight.values);
            out.emplace_back(c.bias.values);
        }
        out.emplace_back(lstm.w.values);
        out.emplace_back(lstm.u.values);
        out.emplace_back(lstm.b.values);
        out.emplace_back(hidden.weight.values);
        out.emplace_back(hidden.bias.values);
        out.emplace_back(output.weight.values);
        out.emplace_back(output.bias.values);
        return out;
    }

    size_t count() const {
        size_t n = 0;
        for (auto s : blocks()) n += s.size();
        return n;
    }
};

template <typename T>
Parameters<T> zeros_like(const ModelConfig& cfg) {
    ShapeInfo info = compute_shapes(cfg);
    Parameters<T> p;
    for (size_t i = 0; i < cfg.conv_blocks.size(); ++i) {
        const ConvSpec& spec = cfg.conv_blocks[i];
        ConvParams<T> c;
        c.weight = Tensor<T>({spec.filters, info.blocks[i].in_channels, spec.kernel_size});
        c.bias = Tensor<T>({spec.filters});
        p.conv.push_back(std::move(c));
    }
    const size_t h = cfg.lstm_units;
    const size_t d = info.seq_features;
    p.lstm.w = Tensor<T>({4 * h, d});
    p.lstm.u = Tensor<T>({4 * h, h});
    p.lstm.b = Tensor<T>({4 * h});
    p.hidden.weight = Tensor<T>({cfg.dense_units, h});
    p.hidden.bias = Tensor<T>({cfg.dense_units});
    p.output.weight = Tensor<T>({1, cfg.dense_units});
    p.output.bias = Tensor<T>({1});
    return p;
}

// He-uniform for ReLU layers (conv, hidden dense), Glorot-uniform for the
// LSTM and the sigmoid output. Biases zero except the LSTM forget gate (1.0).
// Draw order is fixed, so a (config, seed) pair is bit-reproducible.
template <typename T>
Parameters<T> init_params(const ModelConfig& cfg, uint64_t seed) {
    Parameters<T> p = zeros_like<T>(cfg);
    Rng rng(seed);
    auto fill_uniform = [&rng](Tensor<T>& t, double limit) {
        for (T& v : t.values) v = static_cast<T>(rng.uniform(-limit, limit));
    };

    for (auto& c : p.conv) {
        const size_t fan_in = c.weight.dim(1) * c.weight.dim(2);
        fill_uniform(c.weight, std::sqrt(6.0 / static_cast<double>(fan_in)));
    }
    const size_t h = cfg.lstm_units;
    const size_t d = p.lstm.w.dim(1);
    fill_uniform(p.lstm.w, std::sqrt(6.0 / static_cast<double>(d + 4 * h)));
    fill_uniform(p.lstm.u, std::sqrt(6.0 / static_cast<double>(h + 4 * h)));
    for (size_t j = h; j < 2 * h; ++j) p.lstm.b[j] = T(1);  // forget gate
    fill_uniform(p.hidden.weight, std::sqrt(6.0 / static_cast<double>(h)));
    fill_uniform(p.output.weight, std::sqrt(6.0 / static_cast<double>(cfg.dense_units + 1)));
    return p;
}

}  // namespace flowids::nn
