#pragma once

#include <functional>
#include <optional>
#include <string>

#include "flowids/features.hpp"
#include "flowids/nn/model.hpp"

namespace flowids {

struct TrainConfig {
    double learning_rate = 1e-3;
    size_t batch_size = 128;
    size_t max_epochs = 20;
    size_t patience = 3;
    double min_delta = 1e-4;
    uint64_t seed = 0;
    // Grid-search axes; empty means the default grid.
    std::vector<double> grid_learning_rates;
    std::vector<size_t> grid_batch_sizes;
};

struct EpochStats {
    double train_loss = 0.0;
    double train_accuracy = 0.0;
    double val_loss = 0.0;
    double val_accuracy = 0.0;
};

struct TrainHistory {
    std::vector<EpochStats> epochs;
    size_t best_epoch = 0;  // 1-based epoch number holding the minimum val loss
    bool stopped_early = false;
};

// Diagnostic hook run after each epoch's bookkeeping; may adjust the learning
// rate or perturb parameters. Used by tests to script validation sequences.
struct TrainHooks {
    std::function<void(size_t epoch, nn::Parameters<float>&, double& learning_rate)> after_epoch;
};

struct TrainResult {
    nn::Parameters<float> params;
    TrainHistory history;
};

struct EvalStats {
    double loss = 0.0;
    double accuracy = 0.0;
};

// Loss/accuracy of the model over the given rows, dropout off.
EvalStats evaluate_rows(const nn::ModelConfig& cfg, const nn::Parameters<float>& params,
                        const FeatureMatrix& data, const std::vector<size_t>& rows,
                        size_t batch_size);

// Probabilities for the given rows, dropout off, in row order.
std::vector<float> predict_rows(const nn::ModelConfig& cfg, const nn::Parameters<float>& params,
                                const FeatureMatrix& data, const std::vector<size_t>& rows,
                                size_t batch_size);

// Mini-batch Adam training with per-epoch validation and early stopping
// (patience over min-delta improvements of validation loss, best-epoch
// weights restored on exit).
TrainResult train(const nn::ModelConfig& cfg, const TrainConfig& tc, const FeatureMatrix& data,
                  const DatasetSplit& split, const TrainHooks& hooks = {});

struct GridCell {
    double learning_rate = 0.0;
    size_t batch_size = 0;
    double val_loss = 0.0;
    bool failed = false;
    std::string error;
};

struct GridResult {
    TrainConfig best;
    std::vector<GridCell> table;
    TrainResult best_run;
};

// Trains one model per (learning rate, batch size) cell with its own derived
// seed; picks the minimum validation loss, ties resolved toward the lower
// learning rate, then the smaller batch.
GridResult grid_search(const nn::ModelConfig& cfg, const TrainConfig& base,
                       const FeatureMatrix& data, const DatasetSplit& split);

}  // namespace flowids
