#include "flowids/train/trainer.hpp"

#include <algorithm>
#include <cmath>

#include "flowids/rng.hpp"
#include "flowids/train/adam.hpp"
#include "flowids/train/loss.hpp"

namespace flowids {

namespace {

nn::Tensor<float> gather_batch(const FeatureMatrix& data, const std::vector<size_t>& rows,
                               size_t begin, size_t end) {
    nn::Tensor<float> batch({end - begin, data.n_cols});
    for (size_t i = begin; i < end; ++i) {
        const float* src = data.data.data() + rows[i] * data.n_cols;
        std::copy(src, src + data.n_cols, batch.data() + (i - begin) * data.n_cols);
    }
    return batch;
}

std::vector<uint8_t> gather_labels(const FeatureMatrix& data, const std::vector<size_t>& rows,
                                   size_t begin, size_t end) {
    std::vector<uint8_t> labels(end - begin);
    for (size_t i = begin; i < end; ++i) labels[i - begin] = data.labels.values[rows[i]];
    return labels;
}

}  // namespace

std::vector<float> predict_rows(const nn::ModelConfig& cfg, const nn::Parameters<float>& params,
                                const FeatureMatrix& data, const std::vector<size_t>& rows,
                                size_t batch_size) {
    std::vector<float> probs;
    probs.reserve(rows.size());
    for (size_t begin = 0; begin < rows.size(); begin += batch_size) {
        size_t end = std::min(begin + batch_size, rows.size());
        nn::Tensor<float> batch = gather_batch(data, rows, begin, end);
        auto out = nn::model_forward(cfg, params, batch, /*training=*/false);
        probs.insert(probs.end(), out.probs.begin(), out.probs.end());
    }
    return probs;
}

EvalStats evaluate_rows(const nn::ModelConfig& cfg, const nn::Parameters<float>& params,
                        const FeatureMatrix& data, const std::vector<size_t>& rows,
                        size_t batch_size) {
    std::vector<float> probs = predict_rows(cfg, params, data, rows, batch_size);
    std::vector<uint8_t> labels(rows.size());
    for (size_t i = 0; i < rows.size(); ++i) labels[i] = data.labels.values[rows[i]];

    auto bce = bce_loss(probs, labels);
    size_t correct = 0;
    for (size_t i = 0; i < probs.size(); ++i) {
        uint8_t pred = probs[i] >= 0.5f ? 1 : 0;
        if (pred == labels[i]) ++correct;
    }
    return {static_cast<double>(bce.loss),
            static_cast<double>(correct) / static_cast<double>(rows.size())};
}

TrainResult train(const nn::ModelConfig& cfg, const TrainConfig& tc, const FeatureMatrix& data,
                  const DatasetSplit& split, const TrainHooks& hooks) {
    if (tc.learning_rate <= 0.0) throw Error("train: learning_rate must be positive");
    if (tc.batch_size < 1) throw Error("train: batch_size must be >= 1");
    if (tc.patience < 1) throw Error("train: patience must be >= 1");
    if (split.train_idx.empty()) throw Error("train: empty training split");
    if (split.val_idx.empty()) throw Error("train: empty validation split");

    nn::Parameters<float> params = nn::init_params<float>(cfg, cfg.seed);
    AdamState<float> state = AdamState<float>::zeros_for(params);

    TrainResult result;
    nn::Parameters<float> best_params = params;
    double best_val = std::numeric_limits<double>::infinity();
    size_t epochs_without_improvement = 0;
    double lr = tc.learning_rate;

    std::vector<size_t> order = split.train_idx;
    const uint64_t shuffle_seed = derive_seed(tc.seed, "shuffle");
    const uint64_t dropout_seed = derive_seed(tc.seed, "dropout");

    for (size_t epoch = 1; epoch <= tc.max_epochs; ++epoch) {
        Rng shuffle_rng(derive_seed(shuffle_seed, "epoch", epoch));
        shuffle_rng.shuffle(order);

        for (size_t begin = 0, batch_no = 0; begin < order.size();
             begin += tc.batch_size, ++batch_no) {
            size_t end = std::min(begin + tc.batch_size, order.size());
            nn::Tensor<float> batch = gather_batch(data, order, begin, end);
            std::vector<uint8_t> labels = gather_labels(data, order, begin, end);

            uint64_t pass_seed = derive_seed(derive_seed(dropout_seed, "epoch", epoch),
                                             "batch", batch_no);
            auto fwd = nn::model_forward(cfg, params, batch, /*training=*/true, pass_seed);
            auto bce = bce_loss(fwd.probs, labels);
            if (!std::isfinite(bce.loss))
                throw Error("train: non-finite loss at epoch " + std::to_string(epoch) +
                            ", batch " + std::to_string(batch_no));
            auto grads = nn::model_backward(cfg, params, fwd.cache, bce.d_prob);
            adam_step(params, grads, state, lr);
        }

        EpochStats stats;
        EvalStats train_eval = evaluate_rows(cfg, params, data, split.train_idx, tc.batch_size);
        EvalStats val_eval = evaluate_rows(cfg, params, data, split.val_idx, tc.batch_size);
        stats.train_loss = train_eval.loss;
        stats.train_accuracy = train_eval.accuracy;
        stats.val_loss = val_eval.loss;
        stats.val_accuracy = val_eval.accuracy;
        result.history.epochs.push_back(stats);

        if (stats.val_loss < best_val - tc.min_delta) {
            best_val = stats.val_loss;
            best_params = params;
            result.history.best_epoch = epoch;
            epochs_without_improvement = 0;
        } else {
            ++epochs_without_improvement;
            if (epochs_without_improvement >= tc.patience) {
                result.history.stopped_early = true;
                break;
            }
        }
        if (hooks.after_epoch) hooks.after_epoch(epoch, params, lr);
    }

    result.params = std::move(best_params);
    return result;
}

GridResult grid_search(const nn::ModelConfig& cfg, const TrainConfig& base,
                       const FeatureMatrix& data, const DatasetSplit& split) {
    std::vector<double> lrs = base.grid_learning_rates;
    std::vector<size_t> batches = base.grid_batch_sizes;
    if (lrs.empty()) lrs = {1e-2, 1e-3, 1e-4};
    if (batches.empty()) batches = {64, 128, 256};

    GridResult result;
    bool have_best = false;
    double best_loss = std::numeric_limits<double>::infinity();
    size_t cell_index = 0;
    for (double lr : lrs) {
        for (size_t bs : batches) {
            GridCell cell;
            cell.learning_rate = lr;
            cell.batch_size = bs;

            TrainConfig tc = base;
            tc.learning_rate = lr;
            tc.batch_size = bs;
            tc.seed = derive_seed(base.seed, "grid-train", cell_index);
            nn::ModelConfig cell_cfg = cfg;
            cell_cfg.seed = derive_seed(cfg.seed, "grid-init", cell_index);
            try {
                TrainResult run = train(cell_cfg, tc, data, split);
                cell.val_loss = run.history.epochs[run.history.best_epoch - 1].val_loss;
                bool better =
                    !have_best || cell.val_loss < best_loss ||
                    (cell.val_loss == best_loss &&
                     std::make_pair(lr, bs) < std::make_pair(result.best.learning_rate,
                                                             result.best.batch_size));
                if (better) {
                    best_loss = cell.val_loss;
                    result.best = tc;
                    result.best_run = std::move(run);
                    have_best = true;
                }
            } catch (const Error& e) {
                cell.failed = true;
                cell.error = e.what();
            }
            result.table.push_back(std::move(cell));
            ++cell_index;
        }
    }
    if (!have_best) throw Error("grid_search: every cell failed");
    return result;
}

}  // namespace flowids
