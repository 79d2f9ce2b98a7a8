#pragma once

#include <string>

#include "flowids/train/trainer.hpp"

namespace flowids {

// model.json manifest plus weights.bin: flat little-endian IEEE-754 float32
// values in the documented order (conv blocks in depth order (weight, bias),
// LSTM (W, U, b), dense (W, b), output (w, b)). The manifest records the
// SHA-256 of the weight file; load refuses digest or version mismatches.
struct Checkpoint {
    nn::ModelConfig model;
    TrainConfig train_config;
    TrainHistory history;
    nn::Parameters<float> params;
    std::string preprocess_path;
    std::string preprocess_sha256;
};

inline constexpr int kCheckpointVersion = 1;

// Writes <dir>/model.json and <dir>/weights.bin.
void save_checkpoint(const Checkpoint& ckpt, const std::string& dir);

// `manifest_path` is the model.json path; weights load from the same directory.
Checkpoint load_checkpoint(const std::string& manifest_path);

// Digest of the weight file a checkpoint would produce; also what serve
// reports per response.
std::string weights_digest(const nn::Parameters<float>& params);

}  // namespace flowids
