#include "flowids/cli.hpp"

#include <atomic>
#include <chrono>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include <json.hpp>

#include "flowids/digest.hpp"
#include "flowids/metrics.hpp"
#include "flowids/rng.hpp"
#include "flowids/serve.hpp"
#include "flowids/train/checkpoint.hpp"
#include "flowids/train/trainer.hpp"
#include "flowids/util.hpp"

namespace fs = std::filesystem;

namespace flowids::cli {

using ordered_json = nlohmann::ordered_json;

namespace {

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path);
    out << text;
    if (!out) throw Error("write failed: " + path);
}

void write_resolved(const std::string& out_dir, const ordered_json& resolved) {
    write_text((fs::path(out_dir) / "resolved.json").string(), resolved.dump(2) + "\n");
}

// Timestamps live only here; every other output is byte-reproducible.
void append_run_log(const std::string& out_dir, const std::string& message) {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    char stamp[32];
    std::strftime(stamp, sizeof(stamp), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    std::ofstream out(fs::path(out_dir) / "run.log", std::ios::app);
    out << stamp << " " << message << "\n";
}

std::vector<nn::ConvSpec> parse_conv_blocks(const std::string& text) {
    std::vector<nn::ConvSpec> blocks;
    size_t pos = 0;
    while (pos < text.size()) {
        size_t comma = text.find(',', pos);
        std::string item = trim(text.substr(pos, comma == std::string::npos ? comma : comma - pos));
        pos = comma == std::string::npos ? text.size() : comma + 1;
        if (item.empty()) continue;
        size_t colon = item.find(':');
        if (colon == std::string::npos)
            throw Error("conv block \"" + item + "\" must look like FILTERS:KERNEL");
        ParsedNumber f = classify_number(item.substr(0, colon));
        ParsedNumber k = classify_number(item.substr(colon + 1));
        if (f.cls != NumberClass::Finite || k.cls != NumberClass::Finite || f.value < 1 ||
            k.value < 1)
            throw Error("conv block \"" + item + "\" must be positive FILTERS:KERNEL");
        blocks.push_back({static_cast<size_t>(f.value), static_cast<size_t>(k.value)});
    }
    if (blocks.empty()) throw Error("conv blocks: none parsed from \"" + text + "\"");
    return blocks;
}

template <typename T, typename Parse>
std::vector<T> parse_list(const std::string& text, Parse parse, const char* what) {
    std::vector<T> out;
    size_t pos = 0;
    while (pos < text.size()) {
        size_t comma = text.find(',', pos);
        std::string item = trim(text.substr(pos, comma == std::string::npos ? comma : comma - pos));
        pos = comma == std::string::npos ? text.size() : comma + 1;
        if (item.empty()) continue;
        ParsedNumber p = classify_number(item);
        if (p.cls != NumberClass::Finite)
            throw Error(std::string(what) + ": \"" + item + "\" is not a number");
        out.push_back(parse(p.value));
    }
    return out;
}

struct LoadedModel {
    Checkpoint ckpt;
    PreprocessArtifact artifact;
    std::string artifact_path;
    std::string digest;
};

// Loads a checkpoint plus the preprocessing artifact it references (or an
// explicit override) and refuses to proceed when the digests disagree.
LoadedModel load_model(const std::string& checkpoint_path, const std::string& artifacts_dir) {
    LoadedModel m;
    m.ckpt = load_checkpoint(checkpoint_path);
    m.artifact_path = artifacts_dir.empty()
                          ? m.ckpt.preprocess_path
                          : (fs::path(artifacts_dir) / "preprocess.json").string();
    const std::string actual = sha256_file(m.artifact_path);
    if (actual != m.ckpt.preprocess_sha256)
        throw Error("checkpoint/artifact mismatch: checkpoint expects preprocessing digest " +
                    m.ckpt.preprocess_sha256 + " but " + m.artifact_path + " has " + actual);
    m.artifact = load_artifact(m.artifact_path);
    m.digest = weights_digest(m.ckpt.params);
    return m;
}

std::string history_csv(const TrainHistory& history) {
    std::string csv = "epoch,train_loss,train_acc,val_loss,val_acc\n";
    for (size_t i = 0; i < history.epochs.size(); ++i) {
        const auto& e = history.epochs[i];
        csv += std::to_string(i + 1) + "," + format_g9(e.train_loss) + "," +
               format_g9(e.train_accuracy) + "," + format_g9(e.val_loss) + "," +
               format_g9(e.val_accuracy) + "\n";
    }
    return csv;
}

}  // namespace

int cmd_preprocess(const PreprocessOptions& opt) {
    if (opt.data.empty()) throw Error("preprocess: no input CSV files given");
    fs::create_directories(opt.out);
    append_run_log(opt.out, "preprocess started");

    FlowTable raw = load_csv(opt.data);
    PreprocessResult result = run_preprocess(std::move(raw), opt.label_column, opt.seed);

    const std::string artifact_path = (fs::path(opt.out) / "preprocess.json").string();
    save_artifact(result.artifact, artifact_path);
    save_matrix_bin(result.matrix, (fs::path(opt.out) / "features.bin").string(),
                    (fs::path(opt.out) / "labels.bin").string());

    ordered_json resolved;
    resolved["command"] = "preprocess";
    resolved["data"] = opt.data;
    resolved["label-column"] = opt.label_column;
    resolved["out"] = opt.out;
    resolved["seed"] = opt.seed;
    write_resolved(opt.out, resolved);

    const auto& rep = result.artifact.clean_report;
    std::cout << "rows: " << rep.rows_in << " in, " << rep.rows_out << " kept ("
              << rep.rows_dropped_missing << " missing, " << rep.rows_dropped_nonfinite
              << " non-finite, " << rep.rows_dropped_duplicate << " duplicate)\n";
    std::cout << "features: " << result.matrix.n_cols << " ("
              << result.artifact.schema.numeric_columns.size() << " numeric, "
              << result.matrix.n_cols - result.artifact.schema.numeric_columns.size()
              << " one-hot)\n";
    std::cout << "split: " << result.artifact.data_split.train_idx.size() << " train / "
              << result.artifact.data_split.val_idx.size() << " val / "
              << result.artifact.data_split.test_idx.size() << " test\n";
    if (result.unseen_categories > 0)
        std::cout << "warning: " << result.unseen_categories
                  << " val/test cells carry categories unseen in training\n";
    append_run_log(opt.out, "preprocess completed");
    return 0;
}

int cmd_train(const TrainOptions& opt) {
    fs::create_directories(opt.out);
    append_run_log(opt.out, "train started");

    const std::string artifact_path = (fs::path(opt.artifacts) / "preprocess.json").string();
    PreprocessArtifact artifact = load_artifact(artifact_path);
    FeatureMatrix data = load_matrix_bin(artifact,
                                         (fs::path(opt.artifacts) / "features.bin").string(),
                                         (fs::path(opt.artifacts) / "labels.bin").string());

    nn::ModelConfig cfg;
    cfg.input_features = data.n_cols;
    cfg.conv_blocks = parse_conv_blocks(opt.conv_blocks);
    cfg.pool_size = opt.pool_size;
    cfg.lstm_units = opt.lstm_units;
    cfg.dropout_rate = opt.dropout_rate;
    cfg.dense_units = opt.dense_units;
    cfg.seed = derive_seed(opt.seed, "init");
    nn::compute_shapes(cfg);  // validate before any work

    TrainConfig tc;
    tc.learning_rate = opt.learning_rate;
    tc.batch_size = opt.batch_size;
    tc.max_epochs = opt.max_epochs;
    tc.patience = opt.patience;
    tc.min_delta = opt.min_delta;
    tc.seed = derive_seed(opt.seed, "train");
    tc.grid_learning_rates =
        parse_list<double>(opt.grid_learning_rates, [](double v) { return v; }, "grid learning rates");
    tc.grid_batch_sizes = parse_list<size_t>(
        opt.grid_batch_sizes, [](double v) { return static_cast<size_t>(v); }, "grid batch sizes");

    TrainResult run;
    if (opt.grid) {
        GridResult grid = grid_search(cfg, tc, data, artifact.data_split);
        std::string csv = "learning_rate,batch_size,val_loss,status\n";
        for (const auto& cell : grid.table)
            csv += format_g9(cell.learning_rate) + "," + std::to_string(cell.batch_size) + "," +
                   (cell.failed ? "" : format_g9(cell.val_loss)) + "," +
                   (cell.failed ? "failed" : "ok") + "\n";
        write_text((fs::path(opt.out) / "grid.csv").string(), csv);
        tc = grid.best;
        run = std::move(grid.best_run);
        std::cout << "grid: best learning_rate=" << format_g9(tc.learning_rate)
                  << " batch_size=" << tc.batch_size << "\n";
    } else {
        run = train(cfg, tc, data, artifact.data_split);
    }

    write_text((fs::path(opt.out) / "history.csv").string(), history_csv(run.history));

    Checkpoint ckpt;
    ckpt.model = cfg;
    ckpt.train_config = tc;
    ckpt.history = run.history;
    ckpt.params = std::move(run.params);
    ckpt.preprocess_path = artifact_path;
    ckpt.preprocess_sha256 = sha256_file(artifact_path);
    save_checkpoint(ckpt, opt.out);

    ordered_json resolved;
    resolved["command"] = "train";
    resolved["artifacts"] = opt.artifacts;
    resolved["out"] = opt.out;
    resolved["seed"] = opt.seed;
    resolved["conv-blocks"] = opt.conv_blocks;
    resolved["pool-size"] = opt.pool_size;
    resolved["lstm-units"] = opt.lstm_units;
    resolved["dropout-rate"] = opt.dropout_rate;
    resolved["dense-units"] = opt.dense_units;
    resolved["learning-rate"] = opt.learning_rate;
    resolved["batch-size"] = opt.batch_size;
    resolved["max-epochs"] = opt.max_epochs;
    resolved["patience"] = opt.patience;
    resolved["min-delta"] = opt.min_delta;
    resolved["grid"] = opt.grid;
    resolved["grid-learning-rates"] = opt.grid_learning_rates;
    resolved["grid-batch-sizes"] = opt.grid_batch_sizes;
    write_resolved(opt.out, resolved);

    const auto& best = run.history.epochs[run.history.best_epoch - 1];
    std::cout << "epochs: " << run.history.epochs.size()
              << (run.history.stopped_early ? " (early stop)" : "") << ", best epoch "
              << run.history.best_epoch << ": val_loss " << format_g9(best.val_loss)
              << ", val_acc " << format_g9(best.val_accuracy) << "\n";
    append_run_log(opt.out, "train completed");
    return 0;
}

int cmd_evaluate(const EvaluateOptions& opt) {
    if (opt.split != "val" && opt.split != "test")
        throw Error("evaluate: --split must be \"val\" or \"test\", got \"" + opt.split + "\"");
    fs::create_directories(opt.out);
    append_run_log(opt.out, "evaluate started (" + opt.split + ")");

    LoadedModel m = load_model(opt.checkpoint, opt.artifacts);
    const std::string artifacts_dir = fs::path(m.artifact_path).parent_path().string();
    FeatureMatrix data = load_matrix_bin(m.artifact,
                                         (fs::path(artifacts_dir) / "features.bin").string(),
                                         (fs::path(artifacts_dir) / "labels.bin").string());

    const std::vector<size_t>& rows =
        opt.split == "val" ? m.artifact.data_split.val_idx : m.artifact.data_split.test_idx;
    if (rows.empty()) throw Error("evaluate: split \"" + opt.split + "\" is empty");

    std::vector<float> probs =
        predict_rows(m.ckpt.model, m.ckpt.params, data, rows, m.ckpt.train_config.batch_size);
    std::vector<double> scores(probs.begin(), probs.end());
    std::vector<uint8_t> labels(rows.size());
    for (size_t i = 0; i < rows.size(); ++i) labels[i] = data.labels.values[rows[i]];

    MetricsReport report = summary_metrics(confusion(labels, scores, opt.threshold));
    RocResult roc = roc_curve(labels, scores);
    PrResult pr = pr_curve(labels, scores);
    report.auc = roc.auc;
    report.average_precision = pr.average_precision;

    export_curves(roc.points, (fs::path(opt.out) / ("roc_" + opt.split + ".csv")).string());
    export_curves(pr.points, (fs::path(opt.out) / ("pr_" + opt.split + ".csv")).string());

    ordered_json j;
    j["split"] = opt.split;
    j["samples"] = rows.size();
    j["checkpoint"] = opt.checkpoint;
    j["model_digest"] = m.digest;
    j.update(report_to_json(report));
    write_text((fs::path(opt.out) / ("report_" + opt.split + ".json")).string(),
               j.dump(2) + "\n");

    ordered_json resolved;
    resolved["command"] = "evaluate";
    resolved["checkpoint"] = opt.checkpoint;
    resolved["artifacts"] = opt.artifacts;
    resolved["split"] = opt.split;
    resolved["out"] = opt.out;
    resolved["threshold"] = opt.threshold;
    write_resolved(opt.out, resolved);

    std::cout << opt.split << ": accuracy " << (report.accuracy ? format_g9(*report.accuracy) : "n/a")
              << ", auc " << format_g9(roc.auc) << ", ap " << format_g9(pr.average_precision)
              << " over " << rows.size() << " rows\n";
    append_run_log(opt.out, "evaluate completed (" + opt.split + ")");
    return 0;
}

int cmd_predict(const PredictOptions& opt) {
    if (opt.input.empty()) throw Error("predict: no input CSV given");
    LoadedModel m = load_model(opt.checkpoint, opt.artifacts);

    FlowTable input = load_csv({opt.input});
    TransformStats stats;
    FeatureMatrix features = transform_table(m.artifact, input, stats);

    std::vector<size_t> all_rows(features.n_rows);
    for (size_t i = 0; i < all_rows.size(); ++i) all_rows[i] = i;
    std::vector<float> probs = predict_rows(m.ckpt.model, m.ckpt.params, features, all_rows,
                                            m.ckpt.train_config.batch_size);

    std::string csv = "row,probability,label\n";
    for (size_t i = 0; i < probs.size(); ++i)
        csv += std::to_string(i) + "," + format_g9(probs[i]) + "," +
               (static_cast<double>(probs[i]) >= opt.threshold ? "malicious" : "benign") + "\n";
    write_text(opt.out, csv);

    std::cout << probs.size() << " rows classified";
    if (stats.unseen_categories > 0)
        std::cout << " (" << stats.unseen_categories << " unseen category values)";
    std::cout << "\n";
    return 0;
}

namespace {
std::atomic<bool> g_shutdown{false};
void handle_signal(int) { g_shutdown = true; }
}  // namespace

int cmd_serve(const ServeOptions& opt) {
    LoadedModel m = load_model(opt.checkpoint, opt.artifacts);

    ServeConfig sc;
    const size_t colon = opt.bind.rfind(':');
    if (colon == std::string::npos)
        throw Error("serve: --bind must look like HOST:PORT, got \"" + opt.bind + "\"");
    sc.host = opt.bind.substr(0, colon);
    ParsedNumber port = classify_number(opt.bind.substr(colon + 1));
    if (port.cls != NumberClass::Finite || port.value < 0 || port.value > 65535)
        throw Error("serve: invalid port in \"" + opt.bind + "\"");
    sc.port = static_cast<uint16_t>(port.value);
    sc.threshold = opt.threshold;
    sc.batch_window_micros = opt.batch_window;

    InferenceServer server(m.ckpt.model, m.ckpt.params, m.artifact, m.digest, sc);
    server.start();
    std::cout << "serving on " << sc.host << ":" << server.port() << " (model "
              << m.digest.substr(0, 12) << ", threshold " << format_g9(sc.threshold) << ")\n";

    g_shutdown = false;
    std::signal(SIGINT, handle_signal);
    std::signal(SIGTERM, handle_signal);
    while (!g_shutdown) std::this_thread::sleep_for(std::chrono::milliseconds(100));
    std::cout << "shutting down\n";
    server.stop();
    return 0;
}

}  // namespace flowids::cli
