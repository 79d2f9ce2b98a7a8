#include "flowids/train/checkpoint.hpp"

#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "flowids/digest.hpp"

namespace fs = std::filesystem;

namespace flowids {

using ordered_json = nlohmann::ordered_json;

namespace {

ordered_json model_config_to_json(const nn::ModelConfig& m) {
    ordered_json blocks = ordered_json::array();
    for (const auto& b : m.conv_blocks)
        blocks.push_back({{"filters", b.filters}, {"kernel", b.kernel_size}});
    return {{"input_features", m.input_features}, {"conv_blocks", blocks},
            {"pool_size", m.pool_size},           {"lstm_units", m.lstm_units},
            {"dropout_rate", m.dropout_rate},     {"dense_units", m.dense_units},
            {"seed", m.seed}};
}

nn::ModelConfig model_config_from_json(const ordered_json& j) {
    nn::ModelConfig m;
    m.input_features = j.at("input_features").get<size_t>();
    for (const auto& b : j.at("conv_blocks"))
        m.conv_blocks.push_back({b.at("filters").get<size_t>(), b.at("kernel").get<size_t>()});
    m.pool_size = j.at("pool_size").get<size_t>();
    m.lstm_units = j.at("lstm_units").get<size_t>();
    m.dropout_rate = j.at("dropout_rate").get<double>();
    m.dense_units = j.at("dense_units").get<size_t>();
    m.seed = j.at("seed").get<uint64_t>();
    return m;
}

ordered_json train_config_to_json(const TrainConfig& t) {
    return {{"learning_rate", t.learning_rate}, {"batch_size", t.batch_size},
            {"max_epochs", t.max_epochs},       {"patience", t.patience},
            {"min_delta", t.min_delta},         {"seed", t.seed}};
}

TrainConfig train_config_from_json(const ordered_json& j) {
    TrainConfig t;
    t.learning_rate = j.at("learning_rate").get<double>();
    t.batch_size = j.at("batch_size").get<size_t>();
    t.max_epochs = j.at("max_epochs").get<size_t>();
    t.patience = j.at("patience").get<size_t>();
    t.min_delta = j.at("min_delta").get<double>();
    t.seed = j.at("seed").get<uint64_t>();
    return t;
}

std::vector<float> flatten_params(const nn::Parameters<float>& params) {
    std::vector<float> flat;
    flat.reserve(params.count());
    for (auto block : params.blocks()) flat.insert(flat.end(), block.begin(), block.end());
    return flat;
}

}  // namespace

std::string weights_digest(const nn::Parameters<float>& params) {
    std::vector<float> flat = flatten_params(params);
    return sha256_hex(flat.data(), flat.size() * sizeof(float));
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& dir) {
    fs::create_directories(dir);
    std::vector<float> flat = flatten_params(ckpt.params);
    const std::string weights_path = (fs::path(dir) / "weights.bin").string();
    write_file_bytes(weights_path, flat.data(), flat.size() * sizeof(float));

    ordered_json j;
    j["format_version"] = kCheckpointVersion;
    j["model"] = model_config_to_json(ckpt.model);
    j["train"] = train_config_to_json(ckpt.train_config);
    ordered_json epochs = ordered_json::array();
    for (const auto& e : ckpt.history.epochs)
        epochs.push_back({{"train_loss", e.train_loss}, {"train_accuracy", e.train_accuracy},
                          {"val_loss", e.val_loss},     {"val_accuracy", e.val_accuracy}});
    j["history"] = {{"epochs", epochs},
                    {"best_epoch", ckpt.history.best_epoch},
                    {"stopped_early", ckpt.history.stopped_early}};
    j["preprocessing"] = {{"path", ckpt.preprocess_path}, {"sha256", ckpt.preprocess_sha256}};
    j["weights"] = {{"file", "weights.bin"},
                    {"dtype", "float32"},
                    {"count", flat.size()},
                    {"order", "conv[depth](weight,bias);lstm(W,U,b);dense(W,b);output(w,b)"},
                    {"sha256", sha256_hex(flat.data(), flat.size() * sizeof(float))}};

    std::ofstream out(fs::path(dir) / "model.json", std::ios::binary);
    if (!out) throw Error("cannot write checkpoint manifest in " + dir);
    out << j.dump(2) << "\n";
}

Checkpoint load_checkpoint(const std::string& manifest_path) {
    std::ifstream in(manifest_path, std::ios::binary);
    if (!in) throw Error("cannot open checkpoint manifest: " + manifest_path);
    ordered_json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw Error("malformed checkpoint manifest " + manifest_path + ": " + e.what());
    }
    const int version = j.value("format_version", -1);
    if (version != kCheckpointVersion)
        throw Error("unknown checkpoint format_version " + std::to_string(version) + " in " +
                    manifest_path);

    Checkpoint ckpt;
    ckpt.model = model_config_from_json(j.at("model"));
    ckpt.train_config = train_config_from_json(j.at("train"));
    for (const auto& e : j.at("history").at("epochs")) {
        EpochStats s;
        s.train_loss = e.at("train_loss").get<double>();
        s.train_accuracy = e.at("train_accuracy").get<double>();
        s.val_loss = e.at("val_loss").get<double>();
        s.val_accuracy = e.at("val_accuracy").get<double>();
        ckpt.history.epochs.push_back(s);
    }
    ckpt.history.best_epoch = j.at("history").at("best_epoch").get<size_t>();
    ckpt.history.stopped_early = j.at("history").at("stopped_early").get<bool>();
    ckpt.preprocess_path = j.at("preprocessing").at("path").get<std::string>();
    ckpt.preprocess_sha256 = j.at("preprocessing").at("sha256").get<std::string>();

    const auto& w = j.at("weights");
    const std::string weights_path =
        (fs::path(manifest_path).parent_path() / w.at("file").get<std::string>()).string();
    std::vector<uint8_t> bytes = read_file_bytes(weights_path);
    const size_t count = w.at("count").get<size_t>();
    if (bytes.size() != count * sizeof(float))
        throw Error("truncated weight file " + weights_path + ": expected " +
                    std::to_string(count * sizeof(float)) + " bytes, got " +
                    std::to_string(bytes.size()));
    if (sha256_hex(bytes) != w.at("sha256").get<std::string>())
        throw Error("weight digest mismatch for " + weights_path +
                    " (file corrupted or does not belong to this manifest)");

    ckpt.params = nn::zeros_like<float>(ckpt.model);
    if (ckpt.params.count() != count)
        throw Error("weight count " + std::to_string(count) +
                    " does not match model config (" + std::to_string(ckpt.params.count()) + ")");
    const float* src = reinterpret_cast<const float*>(bytes.data());
    for (auto block : ckpt.params.blocks()) {
        std::copy(src, src + block.size(), block.begin());
        src += block.size();
    }
    return ckpt;
}

}  // namespace flowids
