#include "flowids/serve.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <chrono>
#include <cstring>

#include "flowids/util.hpp"

namespace flowids {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

namespace {

ordered_json error_response(const std::string& id, const std::string& code,
                            const std::string& message) {
    ordered_json r;
    if (!id.empty()) r["id"] = id;
    r["error"] = code;
    r["message"] = message;
    return r;
}

std::string field_as_string(const json& v) {
    if (v.is_string()) return v.get<std::string>();
    return v.dump();
}

bool send_all(int fd, const std::string& data) {
    size_t sent = 0;
    while (sent < data.size()) {
        ssize_t n = ::send(fd, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
        if (n <= 0) return false;
        sent += static_cast<size_t>(n);
    }
    return true;
}

}  // namespace

ordered_json classify_request(const nn::ModelConfig& cfg, const nn::Parameters<float>& params,
                              const PreprocessArtifact& artifact,
                              const std::string& model_digest, double threshold,
                              const json& request) {
    const auto started = std::chrono::steady_clock::now();

    std::string id;
    if (request.contains("id")) {
        if (!request.at("id").is_string())
            return error_response("", "bad_request", "\"id\" must be a string");
        id = request.at("id").get<std::string>();
    }
    if (!request.contains("features"))
        return error_response(id, "bad_request", "request needs a \"features\" field");
    const json& features = request.at("features");

    std::vector<float> input;
    try {
        if (features.is_array()) {
            if (features.size() != artifact.n_cols)
                return error_response(
                    id, "bad_dimension",
                    "expected " + std::to_string(artifact.n_cols) + " features, got " +
                        std::to_string(features.size()));
            input.reserve(features.size());
            for (const auto& v : features) {
                if (!v.is_number())
                    return error_response(id, "bad_request", "feature vector must be numeric");
                input.push_back(v.get<float>());
            }
        } else if (features.is_object()) {
            std::map<std::string, std::string> fields;
            for (auto it = features.begin(); it != features.end(); ++it)
                fields[it.key()] = field_as_string(it.value());
            TransformStats stats;
            input = transform_fields(artifact, fields, stats);
        } else {
            return error_response(id, "bad_request",
                                  "\"features\" must be an object (raw flow) or an array "
                                  "(preprocessed vector)");
        }
    } catch (const Error& e) {
        return error_response(id, "missing_fields", e.what());
    }

    nn::Tensor<float> batch({size_t(1), artifact.n_cols});
    std::copy(input.begin(), input.end(), batch.data());
    float prob = 0.0f;
    try {
        prob = nn::model_forward(cfg, params, batch, /*training=*/false).probs[0];
    } catch (const Error& e) {
        return error_response(id, "bad_request", e.what());
    }

    ordered_json response;
    response["id"] = id;
    response["probability"] = static_cast<double>(prob);
    response["label"] = static_cast<double>(prob) >= threshold ? "malicious" : "benign";
    response["model_digest"] = model_digest;
    const auto elapsed = std::chrono::steady_clock::now() - started;
    const auto nanos = std::chrono::duration_cast<std::chrono::nanoseconds>(elapsed).count();
    response["latency_micros"] = (nanos + 999) / 1000;  // round up, never 0
    return response;
}

InferenceServer::InferenceServer(nn::ModelConfig cfg, nn::Parameters<float> params,
                                 PreprocessArtifact artifact, std::string model_digest,
                                 ServeConfig serve)
    : cfg_(std::move(cfg)),
      params_(std::move(params)),
      artifact_(std::move(artifact)),
      model_digest_(std::move(model_digest)),
      serve_(std::move(serve)) {}

InferenceServer::~InferenceServer() { stop(); }

void InferenceServer::start() {
    listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (listen_fd_ < 0) throw Error("serve: cannot create socket");
    int one = 1;
    ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));

    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(serve_.port);
    if (::inet_pton(AF_INET, serve_.host.c_str(), &addr.sin_addr) != 1) {
        ::close(listen_fd_);
        listen_fd_ = -1;
        throw Error("serve: invalid bind address " + serve_.host);
    }
    if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
        ::close(listen_fd_);
        listen_fd_ = -1;
        throw Error("serve: cannot bind " + serve_.host + ":" + std::to_string(serve_.port));
    }
    if (::listen(listen_fd_, 64) != 0) {
        ::close(listen_fd_);
        listen_fd_ = -1;
        throw Error("serve: listen failed");
    }
    sockaddr_in bound{};
    socklen_t len = sizeof(bound);
    ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&bound), &len);
    bound_port_ = ntohs(bound.sin_port);

    running_ = true;
    accept_thread_ = std::thread([this] { accept_loop(); });
}

void InferenceServer::stop() {
    if (!running_.exchange(false)) {
        if (accept_thread_.joinable()) accept_thread_.join();
        return;
    }
    if (listen_fd_ >= 0) {
        ::shutdown(listen_fd_, SHUT_RDWR);
        ::close(listen_fd_);
        listen_fd_ = -1;
    }
    {
        // Stop reading new requests; in-flight lines finish and flush.
        std::lock_guard<std::mutex> lock(conn_mutex_);
        for (int fd : conn_fds_) ::shutdown(fd, SHUT_RD);
    }
    if (accept_thread_.joinable()) accept_thread_.join();
    std::vector<std::thread> threads;
    {
        std::lock_guard<std::mutex> lock(conn_mutex_);
        threads.swap(conn_threads_);
    }
    for (auto& t : threads)
        if (t.joinable()) t.join();
}

void InferenceServer::accept_loop() {
    while (running_) {
        int fd = ::accept(listen_fd_, nullptr, nullptr);
        if (fd < 0) {
            if (!running_) break;
            continue;
        }
        std::lock_guard<std::mutex> lock(conn_mutex_);
        conn_fds_.push_back(fd);
        conn_threads_.emplace_back([this, fd] { handle_connection(fd); });
    }
}

void InferenceServer::handle_connection(int fd) {
    std::string buffer;
    char chunk[4096];
    bool open = true;
    while (open) {
        if (serve_.batch_window_micros > 0 && buffer.find('\n') == std::string::npos) {
            // Optional request coalescing: wait briefly for more input before
            // blocking in recv.
            pollfd p{fd, POLLIN, 0};
            ::poll(&p, 1, serve_.batch_window_micros / 1000);
        }
        ssize_t n = ::recv(fd, chunk, sizeof(chunk), 0);
        if (n <= 0) break;
        buffer.append(chunk, static_cast<size_t>(n));

        size_t start = 0;
        for (;;) {
            size_t nl = buffer.find('\n', start);
            if (nl == std::string::npos) break;
            std::string line = buffer.substr(start, nl - start);
            start = nl + 1;
            if (trim_view(line).empty()) continue;

            ordered_json response;
            try {
                json request = json::parse(line);
                response = classify_request(cfg_, params_, artifact_, model_digest_,
                                            serve_.threshold, request);
            } catch (const json::exception& e) {
                response = error_response("", "parse_error", e.what());
            }
            if (!send_all(fd, response.dump() + "\n")) {
                open = false;
                break;
            }
        }
        buffer.erase(0, start);
    }
    ::close(fd);
}

}  // namespace flowids
