#pragma once

#include <string>
#include <vector>

namespace flowids::cli {

// Fully resolved options (defaults < config file < flags); the resolution
// itself happens in the flag-parsing layer. Every command echoes its resolved
// options as resolved.json in the output directory; wall-clock timestamps go
// only to run.log so all other outputs are byte-reproducible.

struct PreprocessOptions {
    std::vector<std::string> data;
    std::string label_column = "Label";
    std::string out = "artifacts";
    uint64_t seed = 42;
};

struct TrainOptions {
    std::string artifacts = "artifacts";
    std::string out = "model";
    uint64_t seed = 42;
    std::string conv_blocks = "64:3,128:3";
    size_t pool_size = 2;
    size_t lstm_units = 64;
    double dropout_rate = 0.2;
    size_t dense_units = 64;
    double learning_rate = 1e-3;
    size_t batch_size = 128;
    size_t max_epochs = 20;
    size_t patience = 3;
    double min_delta = 1e-4;
    bool grid = false;
    std::string grid_learning_rates = "0.01,0.001,0.0001";
    std::string grid_batch_sizes = "64,128,256";
};

struct EvaluateOptions {
    std::string checkpoint = "model/model.json";
    std::string artifacts = "artifacts";
    std::string split = "test";  // "val" or "test"
    std::string out = "reports";
    double threshold = 0.5;
};

struct PredictOptions {
    std::string checkpoint = "model/model.json";
    std::string artifacts;  // empty: use the checkpoint's recorded reference
    std::string input;
    std::string out = "predictions.csv";
    double threshold = 0.5;
};

struct ServeOptions {
    std::string checkpoint = "model/model.json";
    std::string artifacts;
    std::string bind = "127.0.0.1:9000";
    double threshold = 0.5;
    int batch_window = 0;  // microseconds
};

int cmd_preprocess(const PreprocessOptions& opt);
int cmd_train(const TrainOptions& opt);
int cmd_evaluate(const EvaluateOptions& opt);
int cmd_predict(const PredictOptions& opt);
int cmd_serve(const ServeOptions& opt);  // blocks until SIGINT/SIGTERM

}  // namespace flowids::cli
