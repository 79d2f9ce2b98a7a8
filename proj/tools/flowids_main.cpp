// flowids: preprocess / train / evaluate / predict / serve for the CNN-LSTM
// flow classifier. Option resolution order: built-in defaults, then --config
// JSON (flat object, keys match the long flag names), then explicit flags.

#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "flowids/cli.hpp"
#include "flowids/util.hpp"

using nlohmann::json;

namespace {

json load_config_file(const std::string& path) {
    if (path.empty()) return json::object();
    std::ifstream in(path);
    if (!in) throw flowids::Error("cannot open config file: " + path);
    json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw flowids::Error("malformed config JSON " + path + ": " + e.what());
    }
    if (!j.is_object()) throw flowids::Error("config file must hold a JSON object: " + path);
    return j;
}

// Applies a config-file value to any option the user did not set explicitly.
template <typename T>
void merge_key(const json& file, CLI::App* cmd, const std::string& key, T& target) {
    if (!file.contains(key)) return;
    if (cmd->count("--" + key) > 0) return;  // explicit flag wins
    try {
        target = file.at(key).get<T>();
    } catch (const std::exception& e) {
        throw flowids::Error("config key \"" + key + "\": " + e.what());
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"flowids: hybrid CNN-LSTM intrusion detection over flow features"};
    app.require_subcommand(1);

    flowids::cli::PreprocessOptions pre;
    flowids::cli::TrainOptions tr;
    flowids::cli::EvaluateOptions ev;
    flowids::cli::PredictOptions pd;
    flowids::cli::ServeOptions sv;
    std::string pre_config, tr_config, ev_config, pd_config, sv_config;

    CLI::App* c_pre = app.add_subcommand("preprocess", "Ingest raw flow CSVs into model inputs");
    c_pre->add_option("--data", pre.data, "Input CSV files")->required()->expected(-1);
    c_pre->add_option("--label-column", pre.label_column, "Label column name");
    c_pre->add_option("--out", pre.out, "Output artifact directory");
    c_pre->add_option("--seed", pre.seed, "Master seed");
    c_pre->add_option("--config", pre_config, "JSON config file");

    CLI::App* c_tr = app.add_subcommand("train", "Train the classifier on preprocessed data");
    c_tr->add_option("--artifacts", tr.artifacts, "Preprocessing artifact directory");
    c_tr->add_option("--out", tr.out, "Checkpoint output directory");
    c_tr->add_option("--seed", tr.seed, "Master seed");
    c_tr->add_option("--conv-blocks", tr.conv_blocks, "Conv stack, e.g. 64:3,128:3");
    c_tr->add_option("--pool-size", tr.pool_size, "Max-pool width");
    c_tr->add_option("--lstm-units", tr.lstm_units, "LSTM hidden units");
    c_tr->add_option("--dropout-rate", tr.dropout_rate, "Dropout fraction in [0,1)");
    c_tr->add_option("--dense-units", tr.dense_units, "Hidden dense units");
    c_tr->add_option("--learning-rate", tr.learning_rate, "Adam learning rate");
    c_tr->add_option("--batch-size", tr.batch_size, "Mini-batch size");
    c_tr->add_option("--max-epochs", tr.max_epochs, "Epoch cap");
    c_tr->add_option("--patience", tr.patience, "Early-stopping patience");
    c_tr->add_option("--min-delta", tr.min_delta, "Minimum val-loss improvement");
    c_tr->add_flag("--grid", tr.grid, "Grid-search learning rate x batch size");
    c_tr->add_option("--grid-learning-rates", tr.grid_learning_rates, "Grid learning rates");
    c_tr->add_option("--grid-batch-sizes", tr.grid_batch_sizes, "Grid batch sizes");
    c_tr->add_option("--config", tr_config, "JSON config file");

    CLI::App* c_ev = app.add_subcommand("evaluate", "Metrics and curves on a held-out split");
    c_ev->add_option("--checkpoint", ev.checkpoint, "model.json path");
    c_ev->add_option("--artifacts", ev.artifacts, "Preprocessing artifact directory");
    c_ev->add_option("--split", ev.split, "val or test");
    c_ev->add_option("--out", ev.out, "Report output directory");
    c_ev->add_option("--threshold", ev.threshold, "Decision threshold");
    c_ev->add_option("--config", ev_config, "JSON config file");

    CLI::App* c_pd = app.add_subcommand("predict", "Classify raw flows from a CSV");
    c_pd->add_option("--checkpoint", pd.checkpoint, "model.json path");
    c_pd->add_option("--artifacts", pd.artifacts, "Override artifact directory");
    c_pd->add_option("--input", pd.input, "Raw flow CSV")->required();
    c_pd->add_option("--out", pd.out, "Predictions CSV path");
    c_pd->add_option("--threshold", pd.threshold, "Decision threshold");
    c_pd->add_option("--config", pd_config, "JSON config file");

    CLI::App* c_sv = app.add_subcommand("serve", "Real-time classification over TCP");
    c_sv->add_option("--checkpoint", sv.checkpoint, "model.json path");
    c_sv->add_option("--artifacts", sv.artifacts, "Override artifact directory");
    c_sv->add_option("--bind", sv.bind, "HOST:PORT to listen on");
    c_sv->add_option("--threshold", sv.threshold, "Decision threshold");
    c_sv->add_option("--batch-window", sv.batch_window, "Request coalescing window (us)");
    c_sv->add_option("--config", sv_config, "JSON config file");

    CLI11_PARSE(app, argc, argv);

    try {
        if (c_pre->parsed()) {
            json f = load_config_file(pre_config);
            merge_key(f, c_pre, "data", pre.data);
            merge_key(f, c_pre, "label-column", pre.label_column);
            merge_key(f, c_pre, "out", pre.out);
            merge_key(f, c_pre, "seed", pre.seed);
            return flowids::cli::cmd_preprocess(pre);
        }
        if (c_tr->parsed()) {
            json f = load_config_file(tr_config);
            merge_key(f, c_tr, "artifacts", tr.artifacts);
            merge_key(f, c_tr, "out", tr.out);
            merge_key(f, c_tr, "seed", tr.seed);
            merge_key(f, c_tr, "conv-blocks", tr.conv_blocks);
            merge_key(f, c_tr, "pool-size", tr.pool_size);
            merge_key(f, c_tr, "lstm-units", tr.lstm_units);
            merge_key(f, c_tr, "dropout-rate", tr.dropout_rate);
            merge_key(f, c_tr, "dense-units", tr.dense_units);
            merge_key(f, c_tr, "learning-rate", tr.learning_rate);
            merge_key(f, c_tr, "batch-size", tr.batch_size);
            merge_key(f, c_tr, "max-epochs", tr.max_epochs);
            merge_key(f, c_tr, "patience", tr.patience);
            merge_key(f, c_tr, "min-delta", tr.min_delta);
            merge_key(f, c_tr, "grid", tr.grid);
            merge_key(f, c_tr, "grid-learning-rates", tr.grid_learning_rates);
            merge_key(f, c_tr, "grid-batch-sizes", tr.grid_batch_sizes);
            return flowids::cli::cmd_train(tr);
        }
        if (c_ev->parsed()) {
            json f = load_config_file(ev_config);
            merge_key(f, c_ev, "checkpoint", ev.checkpoint);
            merge_key(f, c_ev, "artifacts", ev.artifacts);
            merge_key(f, c_ev, "split", ev.split);
            merge_key(f, c_ev, "out", ev.out);
            merge_key(f, c_ev, "threshold", ev.threshold);
            return flowids::cli::cmd_evaluate(ev);
        }
        if (c_pd->parsed()) {
            json f = load_config_file(pd_config);
            merge_key(f, c_pd, "checkpoint", pd.checkpoint);
            merge_key(f, c_pd, "artifacts", pd.artifacts);
            merge_key(f, c_pd, "input", pd.input);
            merge_key(f, c_pd, "out", pd.out);
            merge_key(f, c_pd, "threshold", pd.threshold);
            return flowids::cli::cmd_predict(pd);
        }
        if (c_sv->parsed()) {
            json f = load_config_file(sv_config);
            merge_key(f, c_sv, "checkpoint", sv.checkpoint);
            merge_key(f, c_sv, "artifacts", sv.artifacts);
            merge_key(f, c_sv, "bind", sv.bind);
            merge_key(f, c_sv, "threshold", sv.threshold);
            merge_key(f, c_sv, "batch-window", sv.batch_window);
            return flowids::cli::cmd_serve(sv);
        }
    } catch (const flowids::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "unexpected error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
