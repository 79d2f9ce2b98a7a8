#pragma once

#include <cmath>
#include <cstdint>

#include "flowids/nn/params.hpp"
#include "flowids/nn/tensor.hpp"
#include "flowids/rng.hpp"
#include "flowids/util.hpp"

namespace flowids::nn {

// ---- conv1d (valid padding, stride 1) ---------------------------------------

// out[f][t] = bias[f] + sum_{c,k} weight[f][c][k] * input[c][t+k]
template <typename T>
Tensor<T> conv1d_forward(const Tensor<T>& input, const Tensor<T>& weight,
                         const Tensor<T>& bias) {
    const size_t c_in = input.dim(0), len = input.dim(1);
    const size_t filters = weight.dim(0), kernel = weight.dim(2);
    if (weight.dim(1) != c_in)
        throw Error("conv1d: weight expects " + std::to_string(weight.dim(1)) +
                    " input channels, got " + std::to_string(c_in));
    if (kernel > len)
        throw Error("conv1d: kernel " + std::to_string(kernel) + " longer than input " +
                    std::to_string(len));
    const size_t out_len = len - kernel + 1;

    Tensor<T> out({filters, out_len});
    for (size_t f = 0; f < filters; ++f) {
        T* dst = out.data() + f * out_len;
        const T b = bias[f];
        for (size_t t = 0; t < out_len; ++t) dst[t] = b;
        for (size_t c = 0; c < c_in; ++c) {
            const T* src = input.data() + c * len;
            const T* w = weight.data() + (f * c_in + c) * kernel;
            for (size_t k = 0; k < kernel; ++k) {
                const T wk = w[k];
                const T* s = src + k;
                for (size_t t = 0; t < out_len; ++t) dst[t] += wk * s[t];
            }
        }
    }
    return out;
}

template <typename T>
struct Conv1dGrads {
    Tensor<T> d_input;
    Tensor<T> d_weight;
    Tensor<T> d_bias;
};

template <typename T>
Conv1dGrads<T> conv1d_backward(const Tensor<T>& input, const Tensor<T>& weight,
                               const Tensor<T>& d_out) {
    const size_t c_in = input.dim(0), len = input.dim(1);
    const size_t filters = weight.dim(0), kernel = weight.dim(2);
    const size_t out_len = len - kernel + 1;

    Conv1dGrads<T> g;
    g.d_input = Tensor<T>({c_in, len});
    g.d_weight = Tensor<T>({filters, c_in, kernel});
    g.d_bias = Tensor<T>({filters});
    for (size_t f = 0; f < filters; ++f) {
        const T* dz = d_out.data() + f * out_len;
        T db = T(0);
        for (size_t t = 0; t < out_len; ++t) db += dz[t];
        g.d_bias[f] = db;
        for (size_t c = 0; c < c_in; ++c) {
            const T* src = input.data() + c * len;
            T* din = g.d_input.data() + c * len;
            const T* w = weight.data() + (f * c_in + c) * kernel;
            T* dw = g.d_weight.data() + (f * c_in + c) * kernel;
            for (size_t k = 0; k < kernel; ++k) {
                T acc = T(0);
                const T* s = src + k;
                T* d = din + k;
                const T wk = w[k];
                for (size_t t = 0; t < out_len; ++t) {
                    acc += dz[t] * s[t];
                    d[t] += wk * dz[t];
                }
                dw[k] += acc;
            }
        }
    }
    return g;
}

// ---- ReLU (recorded as its own step in the stack) ---------------------------

template <typename T>
Tensor<T> relu(const Tensor<T>& input) {
    Tensor<T> out = input;
    for (T& v : out.values) v = v > T(0) ? v : T(0);
    return out;
}

template <typename T>
Tensor<T> relu_backward(const Tensor<T>& pre_activation, const Tensor<T>& d_out) {
    Tensor<T> d_in = d_out;
    for (size_t i = 0; i < d_in.size(); ++i)
        if (!(pre_activation[i] > T(0))) d_in[i] = T(0);
    return d_in;
}

// ---- max pooling -------------------------------------------------------------

template <typename T>
struct MaxPoolResult {
    Tensor<T> output;               // [C x floor(L/pool)]
    std::vector<uint32_t> argmax;   // flat input index per output cell
};

// Ties resolve to the earliest index; a trailing element beyond the last full
// window is dropped.
template <typename T>
MaxPoolResult<T> maxpool1d_forward(const Tensor<T>& input, size_t pool) {
    const size_t channels = input.dim(0), len = input.dim(1);
    if (len < pool)
        throw Error("maxpool1d: input length " + std::to_string(len) + " shorter than pool " +
                    std::to_string(pool));
    const size_t out_len = len / pool;

    MaxPoolResult<T> r;
    r.output = Tensor<T>({channels, out_len});
    r.argmax.resize(channels * out_len);
    for (size_t c = 0; c < channels; ++c) {
        const T* src = input.data() + c * len;
        for (size_t t = 0; t < out_len; ++t) {
            size_t best = t * pool;
            T best_v = src[best];
            for (size_t k = 1; k < pool; ++k) {
                if (src[t * pool + k] > best_v) {
                    best = t * pool + k;
                    best_v = src[best];
                }
            }
            r.output.at(c, t) = best_v;
            r.argmax[c * out_len + t] = static_cast<uint32_t>(c * len + best);
        }
    }
    return r;
}

template <typename T>
Tensor<T> maxpool1d_backward(const std::vector<uint32_t>& argmax, const Tensor<T>& d_out,
                             size_t channels, size_t in_len) {
    Tensor<T> d_in({channels, in_len});
    for (size_t i = 0; i < d_out.size(); ++i) d_in[argmax[i]] += d_out[i];
    return d_in;
}

// ---- LSTM --------------------------------------------------------------------

template <typename T>
struct LstmCache {
    Tensor<T> input;   // [T x D]
    Tensor<T> gate_i;  // [T x H]
    Tensor<T> gate_f;
    Tensor<T> gate_g;  // tanh candidate
    Tensor<T> gate_o;
    Tensor<T> cell;    // c_t per step
    Tensor<T> hidden;  // h_t per step
};

template <typename T>
struct LstmForwardResult {
    Tensor<T> h_final;  // [H]
    LstmCache<T> cache;
};

// Per step: i = sig(W_i x + U_i h + b_i), f, o likewise; g = tanh(...);
// c_t = f*c_{t-1} + i*g; h_t = o*tanh(c_t). h_0 = c_0 = 0.
//
// Accumulation order per gate row is fixed and part of the contract:
// start from the bias, add W*x terms in ascending d, then U*h terms in
// ascending j. Double-precision results are bit-reproducible against any
// oracle using the same order.
template <typename T>
LstmForwardResult<T> lstm_forward(const Tensor<T>& sequence, const LstmParams<T>& params) {
    const size_t steps = sequence.dim(0), d = sequence.dim(1);
    const size_t h = params.u.dim(1);
    if (params.w.dim(1) != d)
        throw Error("lstm: W expects " + std::to_string(params.w.dim(1)) +
                    " input features, sequence has " + std::to_string(d));
    if (params.w.dim(0) != 4 * h || params.u.dim(0) != 4 * h || params.b.dim(0) != 4 * h)
        throw Error("lstm: gate dimension mismatch");
    if (steps < 1) throw Error("lstm: empty sequence");

    LstmForwardResult<T> r;
    auto& c = r.cache;
    c.input = sequence;
    c.gate_i = Tensor<T>({steps, h});
    c.gate_f = Tensor<T>({steps, h});
    c.gate_g = Tensor<T>({steps, h});
    c.gate_o = Tensor<T>({steps, h});
    c.cell = Tensor<T>({steps, h});
    c.hidden = Tensor<T>({steps, h});

    std::vector<T> z(4 * h);
    std::vector<T> h_prev(h, T(0)), c_prev(h, T(0));
    for (size_t t = 0; t < steps; ++t) {
        const T* x = sequence.data() + t * d;
        for (size_t row = 0; row < 4 * h; ++row) {
            T acc = params.b[row];
            const T* wr = params.w.data() + row * d;
            for (size_t k = 0; k < d; ++k) acc += wr[k] * x[k];
            const T* ur = params.u.data() + row * h;
            for (size_t j = 0; j < h; ++j) acc += ur[j] * h_prev[j];
            z[row] = acc;
        }
        for (size_t j = 0; j < h; ++j) {
            const T gi = T(1) / (T(1) + std::exp(-z[j]));
            const T gf = T(1) / (T(1) + std::exp(-z[h + j]));
            const T gg = std::tanh(z[2 * h + j]);
            const T go = T(1) / (T(1) + std::exp(-z[3 * h + j]));
            const T ct = gf * c_prev[j] + gi * gg;
            const T ht = go * std::tanh(ct);
            c.gate_i.at(t, j) = gi;
            c.gate_f.at(t, j) = gf;
            c.gate_g.at(t, j) = gg;
            c.gate_o.at(t, j) = go;
            c.cell.at(t, j) = ct;
            c.hidden.at(t, j) = ht;
        }
        for (size_t j = 0; j < h; ++j) {
            h_prev[j] = c.hidden.at(t, j);
            c_prev[j] = c.cell.at(t, j);
        }
    }
    r.h_final = Tensor<T>({h});
    for (size_t j = 0; j < h; ++j) r.h_final[j] = c.hidden.at(steps - 1, j);
    return r;
}

template <typename T>
struct LstmGrads {
    LstmParams<T> params;   // dW, dU, db
    Tensor<T> d_input;      // [T x D]
};

// Backpropagation through time over every step; gradients accumulate into
// `grads` so batch members can share one accumulator.
template <typename T>
Tensor<T> lstm_backward(const LstmCache<T>& cache, const LstmParams<T>& params,
                        const Tensor<T>& d_h_final, LstmParams<T>& grads) {
    const size_t steps = cache.input.dim(0), d = cache.input.dim(1);
    const size_t h = params.u.dim(1);

    Tensor<T> d_input({steps, d});
    std::vector<T> dh(d_h_final.values.begin(), d_h_final.values.end());
    std::vector<T> dc(h, T(0));
    std::vector<T> dz(4 * h);

    for (size_t t = steps; t-- > 0;) {
        const T* x = cache.input.data() + t * d;
        for (size_t j = 0; j < h; ++j) {
            const T gi = cache.gate_i.at(t, j);
            const T gf = cache.gate_f.at(t, j);
            const T gg = cache.gate_g.at(t, j);
            const T go = cache.gate_o.at(t, j);
            const T ct = cache.cell.at(t, j);
            const T tc = std::tanh(ct);
            const T c_prev = t > 0 ? cache.cell.at(t - 1, j) : T(0);

            const T dct = dc[j] + dh[j] * go * (T(1) - tc * tc);
            dz[j] = dct * gg * gi * (T(1) - gi);                 // input gate
            dz[h + j] = dct * c_prev * gf * (T(1) - gf);         // forget gate
            dz[2 * h + j] = dct * gi * (T(1) - gg * gg);         // candidate
            dz[3 * h + j] = dh[j] * tc * go * (T(1) - go);       // output gate
            dc[j] = dct * gf;
        }
        const T* h_prev = t > 0 ? cache.hidden.data() + (t - 1) * h : nullptr;
        std::fill(dh.begin(), dh.end(), T(0));
        T* dx = d_input.data() + t * d;
        for (size_t row = 0; row < 4 * h; ++row) {
            const T dzr = dz[row];
            grads.b[row] += dzr;
            T* dw = grads.w.data() + row * d;
            const T* wr = params.w.data() + row * d;
            for (size_t k = 0; k < d; ++k) {
                dw[k] += dzr * x[k];
                dx[k] += wr[k] * dzr;
            }
            T* du = grads.u.data() + row * h;
            const T* ur = params.u.data() + row * h;
            if (h_prev) {
                for (size_t j = 0; j < h; ++j) du[j] += dzr * h_prev[j];
            }
            for (size_t j = 0; j < h; ++j) dh[j] += ur[j] * dzr;
        }
    }
    return d_input;
}

// ---- dropout -----------------------------------------------------------------

template <typename T>
struct DropoutResult {
    Tensor<T> output;
    Tensor<T> mask;  // per-unit multiplier (0 or 1/(1-rate)); empty at inference
};

// Inverted dropout: survivors are scaled by 1/(1-rate) during training so
// inference is the identity.
template <typename T>
DropoutResult<T> dropout_apply(const Tensor<T>& input, double rate, Rng& rng, bool training) {
    if (rate < 0.0 || rate >= 1.0)
        throw Error("dropout: rate must lie in [0,1), got " + std::to_string(rate));
    DropoutResult<T> r;
    if (!training || rate == 0.0) {
        r.output = input;
        return r;
    }
    const T scale = static_cast<T>(1.0 / (1.0 - rate));
    r.mask = Tensor<T>(input.shape);
    r.output = Tensor<T>(input.shape);
    for (size_t i = 0; i < input.size(); ++i) {
        const T m = rng.uniform01() < rate ? T(0) : scale;
        r.mask[i] = m;
        r.output[i] = input[i] * m;
    }
    return r;
}

// ---- dense -------------------------------------------------------------------

enum class Activation { None, ReLU, Sigmoid };

template <typename T>
struct DenseResult {
    Tensor<T> output;
    Tensor<T> pre_activation;
};

template <typename T>
DenseResult<T> dense_forward(const Tensor<T>& input, const DenseParams<T>& params,
                             Activation act) {
    const size_t units = params.weight.dim(0), in = params.weight.dim(1);
    if (input.size() != in)
        throw Error("dense: expected input of " + std::to_string(in) + ", got " +
                    std::to_string(input.size()));
    DenseResult<T> r;
    r.pre_activation = Tensor<T>({units});
    for (size_t u = 0; u < units; ++u) {
        T acc = params.bias[u];
        const T* w = params.weight.data() + u * in;
        for (size_t k = 0; k < in; ++k) acc += w[k] * input[k];
        r.pre_activation[u] = acc;
    }
    r.output = r.pre_activation;
    switch (act) {
        case Activation::None:
            break;
        case Activation::ReLU:
            for (T& v : r.output.values) v = v > T(0) ? v : T(0);
            break;
        case Activation::Sigmoid:
            for (T& v : r.output.values) v = T(1) / (T(1) + std::exp(-v));
            break;
    }
    return r;
}

template <typename T>
Tensor<T> dense_backward(const Tensor<T>& input, const DenseParams<T>& params,
                         const Tensor<T>& d_pre, DenseParams<T>& grads) {
    const size_t units = params.weight.dim(0), in = params.weight.dim(1);
    Tensor<T> d_input({in});
    for (size_t u = 0; u < units; ++u) {
        const T dz = d_pre[u];
        grads.bias[u] += dz;
        T* dw = grads.weight.data() + u * in;
        const T* w = params.weight.data() + u * in;
        for (size_t k = 0; k < in; ++k) {
            dw[k] += dz * input[k];
            d_input[k] += w[k] * dz;
        }
    }
    return d_input;
}

}  // namespace flowids::nn
