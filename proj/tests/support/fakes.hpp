#pragma once

#include "psya/backend.hpp"

#include <atomic>
#include <functional>

namespace psya::testing {

/// Every call fails as if the server were down.
class DownEngine : public TextEngine {
public:
    std::string complete(const BackendRequest&) override {
        ++calls;
        throw BackendUnavailableError("engine down");
    }
    std::vector<double> embed(std::string_view) override { throw BackendUnavailableError("engine down"); }
    std::string name() const override { return "down"; }
    std::atomic<int> calls{0};
};

/// Replies through a callback; embeddings are hashed.
class FnEngine : public TextEngine {
public:
    explicit FnEngine(std::function<std::string(const BackendRequest&)> fn) : fn_(std::move(fn)) {}
    std::string complete(const BackendRequest& req) override {
        ++calls;
        return fn_(req);
    }
    std::vector<double> embed(std::string_view text) override { return hashed_embedding(text); }
    std::string name() const override { return "fn"; }
    std::atomic<int> calls{0};

private:
    std::function<std::string(const BackendRequest&)> fn_;
};

}  // namespace psya::testing
