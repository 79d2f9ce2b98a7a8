#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "flowids/util.hpp"

namespace flowids::nn {

struct ConvSpec {
    size_t filters = 0;
    size_t kernel_size = 0;  // stride 1, valid padding
};

struct ModelConfig {
    size_t input_features = 0;
    std::vector<ConvSpec> conv_blocks;
    size_t pool_size = 2;
    size_t lstm_units = 0;
    double dropout_rate = 0.0;
    size_t dense_units = 0;
    uint64_t seed = 0;

    // Default stack: two conv blocks (64x3, 128x3) each followed by pool 2,
    // LSTM 64, dropout 0.2, dense 64 ReLU, dense 1 sigmoid.
    static ModelConfig defaults(size_t input_features) {
        ModelConfig c;
        c.input_features = input_features;
        c.conv_blocks = {{64, 3}, {128, 3}};
        c.pool_size = 2;
        c.lstm_units = 64;
        c.dropout_rate = 0.2;
        c.dense_units = 64;
        return c;
    }
};

struct BlockShape {
    size_t in_channels = 0;
    size_t in_len = 0;
    size_t conv_len = 0;  // in_len - kernel + 1
    size_t pool_len = 0;  // conv_len / pool_size
};

// Shape algebra for the whole stack, computed without running anything.
// Used both to validate configs and as the oracle for runtime shapes.
struct ShapeInfo {
    std::vector<BlockShape> blocks;
    size_t seq_len = 0;       // LSTM timesteps T (pooled length of last block)
    size_t seq_features = 0;  // LSTM input width D (last block's filters)
    size_t param_count = 0;
};

inline ShapeInfo compute_shapes(const ModelConfig& cfg) {
    if (cfg.input_features == 0) throw Error("model config: input_features must be positive");
    if (cfg.conv_blocks.empty()) throw Error("model config: at least one conv block required");
    if (cfg.pool_size < 2) throw Error("model config: pool_size must be >= 2");
    if (cfg.lstm_units == 0) throw Error("model config: lstm_units must be positive");
    if (cfg.dense_units == 0) throw Error("model config: dense_units must be positive");
    if (cfg.dropout_rate < 0.0 || cfg.dropout_rate >= 1.0)
        throw Error("model config: dropout_rate must lie in [0,1)");

    ShapeInfo info;
    size_t channels = 1;
    size_t length = cfg.input_features;
    size_t params = 0;
    for (size_t i = 0; i < cfg.conv_blocks.size(); ++i) {
        const ConvSpec& spec = cfg.conv_blocks[i];
        if (spec.filters == 0 || spec.kernel_size == 0)
            throw Error("conv block " + std::to_string(i) + ": filters and kernel must be positive");
        if (spec.kernel_size > length)
            throw Error("conv block " + std::to_string(i) + ": kernel " +
                        std::to_string(spec.kernel_size) + " longer than input length " +
                        std::to_string(length));
        BlockShape bs;
        bs.in_channels = channels;
        bs.in_len = length;
        bs.conv_len = length - spec.kernel_size + 1;
        if (bs.conv_len < cfg.pool_size)
            throw Error("conv block " + std::to_string(i) + ": length " +
                        std::to_string(bs.conv_len) + " too short for pool " +
                        std::to_string(cfg.pool_size));
        bs.pool_len = bs.conv_len / cfg.pool_size;
        params += spec.filters * channels * spec.kernel_size + spec.filters;
        channels = spec.filters;
        length = bs.pool_len;
        info.blocks.push_back(bs);
    }
    info.seq_len = length;
    info.seq_features = channels;
    if (info.seq_len < 1) throw Error("model config: sequence collapsed to zero length");

    const size_t h = cfg.lstm_units;
    const size_t d = info.seq_features;
    params += 4 * h * d + 4 * h * h + 4 * h;             // LSTM W, U, b
    params += cfg.dense_units * h + cfg.dense_units;     // hidden dense
    params += cfg.dense_units + 1;                       // output w, b
    info.param_count = params;
    return info;
}

}  // namespace flowids::nn
