#pragma once

// Minimal chat-completions / embeddings server for record-replay tests.
// Answers are a pure function of the prompt: the first listed option, 0.5
// scores, the schema example, or a fixed sentence.

#include "psya/backend.hpp"

#include <httplib.h>

#include <atomic>
#include <string>
#include <thread>

namespace psya::testing {

inline std::string stub_answer(const std::string& prompt) {
    static const std::string kChoice = "Answer with exactly one of the following options: ";
    static const std::string kScores = "Answer with exactly ";
    static const std::string kJson = "Reply with a single JSON object shaped like this example and nothing else:\n";
    if (auto pos = prompt.rfind(kJson); pos != std::string::npos) return prompt.substr(pos + kJson.size());
    if (auto pos = prompt.rfind(kChoice); pos != std::string::npos) {
        const auto rest = prompt.substr(pos + kChoice.size());
        const auto bar = rest.find(" | ");
        auto first = rest.substr(0, bar == std::string::npos ? rest.find_last_of('.') : bar);
        return first;
    }
    if (auto pos = prompt.rfind(kScores); pos != std::string::npos) {
        const int n = std::stoi(prompt.substr(pos + kScores.size()));
        std::string out;
        for (int i = 0; i < n; ++i) out += i ? " 0.5" : "0.5";
        return out;
    }
    return "I carry on with what I was doing.";
}

class StubServer {
public:
    /// `fail_status` != 0 makes every request fail with that status.
    explicit StubServer(int fail_status = 0) : fail_status_(fail_status) {
        server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
            ++chat_calls_;
            if (fail(res)) return;
            const auto body = json::parse(req.body);
            const auto prompt = body.at("messages").back().at("content").get<std::string>();
            json out = {{"choices", json::array({{{"index", 0},
                                                  {"message", {{"role", "assistant"}, {"content", stub_answer(prompt)}}},
                                                  {"finish_reason", "stop"}}})},
                        {"usage", {{"prompt_tokens", 1}, {"completion_tokens", 1}}}};
            res.set_content(out.dump(), "application/json");
        });
        server_.Post("/v1/embeddings", [this](const httplib::Request& req, httplib::Response& res) {
            ++embed_calls_;
            if (fail(res)) return;
            const auto body = json::parse(req.body);
            const auto input = body.at("input");
            const std::string text = input.is_array() ? input.at(0).get<std::string>() : input.get<std::string>();
            json out = {{"data", json::array({{{"index", 0}, {"embedding", hashed_embedding(text)}}})}};
            res.set_content(out.dump(), "application/json");
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~StubServer() {
        server_.stop();
        if (thread_.joinable()) thread_.join();
    }
    StubServer(const StubServer&) = delete;
    StubServer& operator=(const StubServer&) = delete;

    std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }
    int chat_calls() const { return chat_calls_; }
    int embed_calls() const { return embed_calls_; }

private:
    bool fail(httplib::Response& res) const {
        if (!fail_status_) return false;
        res.status = fail_status_;
        res.set_content("{\"error\":\"stub failure\"}", "application/json");
        return true;
    }

    httplib::Server server_;
    int fail_status_ = 0;
    int port_ = 0;
    std::atomic<int> chat_calls_{0};
    std::atomic<int> embed_calls_{0};
    std::thread thread_;
};

}  // namespace psya::testing
