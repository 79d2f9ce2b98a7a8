#pragma once

#include <limits>

#include "flowids/nn/layers.hpp"

namespace flowids::nn {

// Everything the reverse pass needs from one sample's forward pass.
template <typename T>
struct SampleCache {
    std::vector<Tensor<T>> conv_in;                // input to each conv block
    std::vector<Tensor<T>> conv_z;                 // conv pre-activations
    std::vector<std::vector<uint32_t>> pool_argmax;
    LstmCache<T> lstm;
    Tensor<T> dropout_mask;   // empty when dropout was the identity
    Tensor<T> dropout_out;    // hidden dense input
    Tensor<T> hidden_z;
    Tensor<T> hidden_out;     // output layer input
    T prob = T(0);
};

// Present iff the pass ran in training mode.
template <typename T>
struct ForwardCache {
    std::vector<SampleCache<T>> samples;
};

template <typename T>
struct ForwardResult {
    std::vector<T> probs;
    ForwardCache<T> cache;
};

// One feature vector through the stack: [1 x F] -> conv/ReLU/pool blocks ->
// the [C x L'] map transposed into L' timesteps of C features -> LSTM ->
// dropout -> dense ReLU -> dense sigmoid.
//
// Dropout draws come from a per-row stream derived from (dropout_seed, row),
// so batch evaluation order never changes the masks.
template <typename T>
ForwardResult<T> model_forward(const ModelConfig& cfg, const Parameters<T>& params,
                               const Tensor<T>& batch, bool training,
                               uint64_t dropout_seed = 0) {
    const ShapeInfo shapes = compute_shapes(cfg);
    if (batch.shape.size() != 2 || batch.dim(1) != cfg.input_features)
        throw Error("input layer: expected batch of " + std::to_string(cfg.input_features) +
                    " features, got " +
                    std::to_string(batch.shape.size() == 2 ? batch.dim(1) : 0));
    const size_t batch_size = batch.dim(0);

    ForwardResult<T> result;
    result.probs.resize(batch_size);
    if (training) result.cache.samples.resize(batch_size);

    for (size_t row = 0; row < batch_size; ++row) {
        SampleCache<T> local;
        SampleCache<T>& cache = training ? result.cache.samples[row] : local;

        Tensor<T> current({size_t(1), cfg.input_features});
        std::copy(batch.data() + row * cfg.input_features,
                  batch.data() + (row + 1) * cfg.input_features, current.data());

        for (size_t blk = 0; blk < cfg.conv_blocks.size(); ++blk) {
            if (training) cache.conv_in.push_back(current);
            Tensor<T> z = conv1d_forward(current, params.conv[blk].weight, params.conv[blk].bias);
            Tensor<T> activated = relu(z);
            if (training) cache.conv_z.push_back(std::move(z));
            MaxPoolResult<T> pooled = maxpool1d_forward(activated, cfg.pool_size);
            if (training) cache.pool_argmax.push_back(std::move(pooled.argmax));
            current = std::move(pooled.output);
        }

        // Bridge: pooled map [C x L'] becomes L' timesteps of C features.
        const size_t channels = current.dim(0), seq_len = current.dim(1);
        Tensor<T> seq({seq_len, channels});
        for (size_t c = 0; c < channels; ++c)
            for (size_t t = 0; t < seq_len; ++t) seq.at(t, c) = current.at(c, t);

        LstmForwardResult<T> lstm_out = lstm_forward(seq, params.lstm);
        if (training) cache.lstm = std::move(lstm_out.cache);

        Rng row_rng(derive_seed(dropout_seed, "dropout-row", row));
        DropoutResult<T> dropped =
            dropout_apply(lstm_out.h_final, cfg.dropout_rate, row_rng, training);
        if (training) {
            cache.dropout_mask = std::move(dropped.mask);
            cache.dropout_out = dropped.output;
        }

        DenseResult<T> hidden = dense_forward(dropped.output, params.hidden, Activation::ReLU);
        DenseResult<T> out = dense_forward(hidden.output, params.output, Activation::Sigmoid);
        if (training) {
            cache.hidden_z = std::move(hidden.pre_activation);
            cache.hidden_out = std::move(hidden.output);
        }

        // Keep the probability strictly inside (0,1) even when the sigmoid
        // saturates in the working precision.
        T p = out.output[0];
        const T hi = T(1) - std::numeric_limits<T>::epsilon() / T(2);
        p = std::min(std::max(p, std::numeric_limits<T>::min()), hi);
        result.probs[row] = p;
        if (training) cache.prob = p;

        (void)shapes;
    }
    return result;
}

// Exact analytic gradients of the batch loss with respect to every parameter,
// given dLoss/dProb per row. Routes through pool argmax, dropout masks, and
// the full LSTM recurrence.
template <typename T>
Parameters<T> model_backward(const ModelConfig& cfg, const Parameters<T>& params,
                             const ForwardCache<T>& cache, const std::vector<T>& d_prob) {
    if (cache.samples.size() != d_prob.size())
        throw Error("model_backward: cache holds " + std::to_string(cache.samples.size()) +
                    " samples, upstream gradient has " + std::to_string(d_prob.size()));
    if (cache.samples.empty()) throw Error("model_backward: empty cache (training-mode pass required)");

    Parameters<T> grads = zeros_like<T>(cfg);

    for (size_t row = 0; row < cache.samples.size(); ++row) {
        const SampleCache<T>& s = cache.samples[row];

        // sigmoid output layer
        const T p = s.prob;
        Tensor<T> d_logit({size_t(1)});
        d_logit[0] = d_prob[row] * p * (T(1) - p);
        Tensor<T> d_hidden_out = dense_backward(s.hidden_out, params.output, d_logit, grads.output);

        // hidden ReLU dense
        Tensor<T> d_hidden_z = relu_backward(s.hidden_z, d_hidden_out);
        Tensor<T> d_drop = dense_backward(s.dropout_out, params.hidden, d_hidden_z, grads.hidden);

        // dropout
        if (s.dropout_mask.size() > 0)
            for (size_t i = 0; i < d_drop.size(); ++i) d_drop[i] *= s.dropout_mask[i];

        // LSTM (BPTT)
        Tensor<T> d_seq = lstm_backward(s.lstm, params.lstm, d_drop, grads.lstm);

        // bridge transpose back to [C x L']
        const size_t seq_len = d_seq.dim(0), channels = d_seq.dim(1);
        Tensor<T> d_current({channels, seq_len});
        for (size_t t = 0; t < seq_len; ++t)
            for (size_t c = 0; c < channels; ++c) d_current.at(c, t) = d_seq.at(t, c);

        // conv blocks in reverse
        for (size_t blk = cfg.conv_blocks.size(); blk-- > 0;) {
            const Tensor<T>& z = s.conv_z[blk];
            Tensor<T> d_act =
                maxpool1d_backward(s.pool_argmax[blk], d_current, z.dim(0), z.dim(1));
            Tensor<T> d_z = relu_backward(z, d_act);
            Conv1dGrads<T> g = conv1d_backward(s.conv_in[blk], params.conv[blk].weight, d_z);
            for (size_t i = 0; i < g.d_weight.size(); ++i)
                grads.conv[blk].weight[i] += g.d_weight[i];
            for (size_t i = 0; i < g.d_bias.size(); ++i) grads.conv[blk].bias[i] += g.d_bias[i];
            d_current = std::move(g.d_input);
        }
    }
    return grads;
}

}  // namespace flowids::nn
