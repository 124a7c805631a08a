#include "psya/backend.hpp"

#include <httplib.h>

#include <condition_variable>
#include <cstdlib>
#include <thread>

namespace psya {

struct HttpEngine::Limiter {
    explicit Limiter(int cap) : free(cap > 0 ? cap : 1) {}

    void acquire() {
        std::unique_lock lock(mu);
        cv.wait(lock, [&] { return free > 0; });
        --free;
    }
    void release() {
        {
            std::lock_guard lock(mu);
            ++free;
        }
        cv.notify_one();
    }

    std::mutex mu;
    std::condition_variable cv;
    int free;
};

HttpEngine::HttpEngine(HttpConfig config)
    : config_(std::move(config)), limiter_(std::make_unique<Limiter>(config_.max_in_flight)) {
    if (config_.attempts < 1) throw ConfigurationError("http attempts must be >= 1");
}

HttpEngine::~HttpEngine() = default;

json HttpEngine::chat_body(const BackendRequest& req) const {
    return json{{"model", config_.model},
                {"messages", json::array({json{{"role", "user"}, {"content", req.rendered_prompt}}})},
                {"temperature", req.constraints.temperature},
                {"seed", req.constraints.seed},
                {"max_tokens", req.constraints.max_tokens}};
}

json HttpEngine::post_with_retry(const std::string& path, const json& body) {
    httplib::Client client(config_.base_url);
    client.set_connection_timeout(config_.timeout);
    client.set_read_timeout(config_.timeout);
    client.set_write_timeout(config_.timeout);
    httplib::Headers headers;
    if (const char* key = std::getenv(config_.api_key_env.c_str()); key && *key)
        headers.emplace("Authorization", std::string("Bearer ") + key);

    const std::string payload = body.dump();
    auto delay = config_.initial_backoff;
    std::string last_error;
    for (int attempt = 1; attempt <= config_.attempts; ++attempt) {
        limiter_->acquire();
        auto res = client.Post(path, headers, payload, "application/json");
        limiter_->release();
        if (res && res->status >= 200 && res->status < 300) {
            json j = json::parse(res->body, nullptr, false);
            if (j.is_discarded()) throw BackendUnavailableError("endpoint returned a non-JSON body from " + path);
            return j;
        }
        last_error = res ? "HTTP " + std::to_string(res->status) : "transport error: " + httplib::to_string(res.error());
        if (attempt < config_.attempts) {
            std::this_thread::sleep_for(delay);
            delay = std::chrono::milliseconds(
                static_cast<std::int64_t>(static_cast<double>(delay.count()) * config_.backoff_factor));
        }
    }
    throw BackendUnavailableError("backend unavailable at " + config_.base_url + path + " after " +
                                  std::to_string(config_.attempts) + " attempts: " + last_error);
}

std::string HttpEngine::complete(const BackendRequest& req) {
    const json j = post_with_retry(config_.chat_path, chat_body(req));
    try {
        const auto& choice = j.at("choices").at(0);
        if (choice.contains("message")) return choice.at("message").at("content").get<std::string>();
        return choice.at("text").get<std::string>();
    } catch (const json::exception& e) {
        throw FormatError(std::string("unexpected completion payload: ") + e.what(), j.dump());
    }
}

std::vector<double> HttpEngine::embed(std::string_view text) {
    json body = {{"model", config_.embedding_model.empty() ? config_.model : config_.embedding_model},
                 {"input", std::string(text)}};
    const json j = post_with_retry(config_.embed_path, body);
    try {
        return j.at("data").at(0).at("embedding").get<std::vector<double>>();
    } catch (const json::exception& e) {
        throw FormatError(std::string("unexpected embedding payload: ") + e.what(), j.dump());
    }
}

}  // namespace psya
