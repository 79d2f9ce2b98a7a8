#pragma once

#include <atomic>
#include <cstdint>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "flowids/features.hpp"
#include "flowids/nn/model.hpp"

namespace flowids {

struct ServeConfig {
    std::string host = "127.0.0.1";
    uint16_t port = 9000;        // 0 picks an ephemeral port
    double threshold = 0.5;
    int batch_window_micros = 0; // coalesce reads per connection; 0 = off
};

// Classifies one already-parsed request line. `features` may be an object
// (raw flow: schema column -> string value, run through the stored
// preprocessing) or an array (preprocessed vector of length F). Returns the
// response object; errors come back as {"id", "error", "message"}.
nlohmann::ordered_json classify_request(const nn::ModelConfig& cfg,
                                        const nn::Parameters<float>& params,
                                        const PreprocessArtifact& artifact,
                                        const std::string& model_digest, double threshold,
                                        const nlohmann::json& request);

// Newline-delimited JSON over TCP: one request per line, one response per
// line, order preserved per connection. Model parameters are loaded once and
// never mutated while serving; stop() drains in-flight requests.
class InferenceServer {
public:
    InferenceServer(nn::ModelConfig cfg, nn::Parameters<float> params,
                    PreprocessArtifact artifact, std::string model_digest, ServeConfig serve);
    ~InferenceServer();

    InferenceServer(const InferenceServer&) = delete;
    InferenceServer& operator=(const InferenceServer&) = delete;

    void start();
    void stop();
    uint16_t port() const { return bound_port_; }

private:
    void accept_loop();
    void handle_connection(int fd);

    nn::ModelConfig cfg_;
    nn::Parameters<float> params_;
    PreprocessArtifact artifact_;
    std::string model_digest_;
    ServeConfig serve_;

    int listen_fd_ = -1;
    uint16_t bound_port_ = 0;
    std::atomic<bool> running_{false};
    std::thread accept_thread_;
    std::mutex conn_mutex_;
    std::vector<int> conn_fds_;
    std::vector<std::thread> conn_threads_;
};

}  // namespace flowids
