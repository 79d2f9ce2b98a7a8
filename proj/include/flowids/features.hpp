#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "flowids/ingest.hpp"

namespace flowids {

struct DroppedColumn {
    std::string name;
    std::string reason;
};

struct FeatureSchema {
    std::vector<std::string> numeric_columns;
    std::vector<std::string> categorical_columns;
    std::vector<DroppedColumn> dropped_columns;
    // categorical column -> observed training categories, sorted ascending
    // (numeric-aware), deduplicated
    std::map<std::string, std::vector<std::string>> categories;
};

// Dense numeric staging matrix, row-major, double precision.
struct NumericMatrix {
    std::vector<double> data;
    size_t n_rows = 0;
    size_t n_cols = 0;

    double& at(size_t r, size_t c) { return data[r * n_cols + c]; }
    double at(size_t r, size_t c) const { return data[r * n_cols + c]; }
};

struct Scaler {
    std::vector<double> min;
    std::vector<double> max;
    size_t fitted_on = 0;
};

// Final model input: scaled numerics followed by one-hot blocks, single
// precision (the training dtype).
struct FeatureMatrix {
    std::vector<float> data;
    size_t n_rows = 0;
    size_t n_cols = 0;
    std::vector<std::string> feature_names;
    LabelVector labels;

    float& at(size_t r, size_t c) { return data[r * n_cols + c]; }
    float at(size_t r, size_t c) const { return data[r * n_cols + c]; }
};

struct DatasetSplit {
    std::vector<size_t> train_idx;
    std::vector<size_t> val_idx;
    std::vector<size_t> test_idx;
    uint64_t seed = 0;
    static constexpr double kRatios[3] = {0.70, 0.15, 0.15};
};

struct SelectResult {
    FeatureSchema schema;
    FlowTable reduced;  // feature columns only, label and dropped removed
};

// Drops identifier/leakage columns (Flow ID, Source IP, Destination IP,
// Timestamp), classifies Protocol as categorical, everything else numeric.
SelectResult select_features(const FlowTable& table, const std::string& label_column);

// Per-feature min/max over the given (training) matrix only.
Scaler fit_scaler(const NumericMatrix& train_matrix);

// x' = (x - min) / (max - min), clamped to [0,1]; constant features map to 0.
void apply_scaler(const Scaler& scaler, NumericMatrix& matrix);

std::vector<std::string> fit_categories(const std::vector<std::string>& values);

enum class EncodeMode { Train, Inference };

struct OneHotBlock {
    std::vector<float> data;  // row-major n_rows x categories.size()
    size_t n_rows = 0;
    size_t n_cols = 0;
    size_t unseen_count = 0;  // inference mode only
};

OneHotBlock one_hot(const std::vector<std::string>& values,
                    const std::vector<std::string>& categories, EncodeMode mode);

// Stratified 70/15/15 split, deterministic per seed. Global part sizes are
// floor(0.70 n) / floor(0.15 n) / remainder; per-class seats are a controlled
// rounding of exact proportionality, so every class count in every part is
// within +-1 of the global ratio.
DatasetSplit split(size_t n, const LabelVector& labels, uint64_t seed);

// ---- pipeline assembly -----------------------------------------------------

struct PreprocessArtifact {
    std::string label_column;
    uint64_t seed = 0;  // master seed the sub-seeds were derived from
    CleanReport clean_report;
    FeatureSchema schema;
    Scaler scaler;
    DatasetSplit data_split;
    std::vector<std::string> feature_names;
    size_t n_rows = 0;
    size_t n_cols = 0;
};

struct PreprocessResult {
    PreprocessArtifact artifact;
    FeatureMatrix matrix;
    size_t unseen_categories = 0;  // across val/test encoding
};

// clean -> binarize -> select -> split -> fit/apply scaler (train rows only)
// -> one-hot -> assemble. The one high-level entry behind cmd_preprocess.
PreprocessResult run_preprocess(FlowTable raw, const std::string& label_column, uint64_t seed);

struct TransformStats {
    size_t unseen_categories = 0;
};

// Applies the stored preprocessing to new raw flows. Both entry points share
// one arithmetic path, so batch predictions and the serving path agree.
FeatureMatrix transform_table(const PreprocessArtifact& artifact, const FlowTable& input,
                              TransformStats& stats);
std::vector<float> transform_fields(const PreprocessArtifact& artifact,
                                    const std::map<std::string, std::string>& fields,
                                    TransformStats& stats);

// Single-document JSON persistence of every training-time transform.
void save_artifact(const PreprocessArtifact& artifact, const std::string& path);
PreprocessArtifact load_artifact(const std::string& path);

void save_matrix_bin(const FeatureMatrix& m, const std::string& features_path,
                     const std::string& labels_path);
FeatureMatrix load_matrix_bin(const PreprocessArtifact& artifact,
                              const std::string& features_path, const std::string& labels_path);

}  // namespace flowids
