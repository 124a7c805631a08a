#pragma once

// Every piece of generated text flows through Gateway. Three engines sit
// behind it: scripted (ordered pattern rules), replay (transcript lookup by
// request digest) and HTTP (chat-completion endpoint).

#include <json.hpp>

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <regex>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace psya {

using json = nlohmann::json;

enum class FormatKind { Freetext, Choice, Scores, JsonSchema };

struct ExpectedFormat {
    FormatKind kind = FormatKind::Freetext;
    std::vector<std::string> options;  // Choice
    int score_count = 0;               // Scores
    std::string schema;                // JsonSchema

    static ExpectedFormat freetext() { return {}; }
    static ExpectedFormat choice(std::vector<std::string> opts) { return {FormatKind::Choice, std::move(opts), 0, {}}; }
    static ExpectedFormat scores(int n) { return {FormatKind::Scores, {}, n, {}}; }
    static ExpectedFormat json_schema(std::string name) { return {FormatKind::JsonSchema, {}, 0, std::move(name)}; }
};

struct Constraints {
    int max_tokens = 512;
    double temperature = 0.0;
    std::uint64_t seed = 0;
    ExpectedFormat format;
};

struct BackendRequest {
    std::string template_name;
    std::string rendered_prompt;
    Constraints constraints;
};

struct Usage {
    int prompt_tokens = 0;
    int completion_tokens = 0;
};

struct BackendResponse {
    std::string text;
    std::optional<json> parsed;
    Usage usage;
    std::string hash_key;
};

class BackendError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class BackendUnavailableError : public BackendError {
public:
    using BackendError::BackendError;
};

class ReplayMissError : public BackendError {
public:
    ReplayMissError(std::string digest, std::string template_name);
    const std::string& digest() const { return digest_; }
    const std::string& template_name() const { return template_; }

private:
    std::string digest_;
    std::string template_;
};

class FormatError : public BackendError {
public:
    FormatError(const std::string& what, std::string raw_text) : BackendError(what), raw_(std::move(raw_text)) {}
    const std::string& raw_text() const { return raw_; }

private:
    std::string raw_;
};

/// Invalid configuration (unknown names, malformed files, mismatched flags).
class ConfigurationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Canonical JSON of the request fields that determine the response.
json canonical_request(const BackendRequest& req);
/// SHA-256 hex digest of canonical_request(); stable across processes and platforms.
std::string request_digest(const BackendRequest& req);
std::string sha256_hex(std::string_view data);

/// Structured-output schemas known to the engine: a worked example (also the
/// scripted default) plus the keys a reply must contain.
struct SchemaSpec {
    std::string name;
    std::string example;
    std::vector<std::string> required_keys;
};

const SchemaSpec* find_schema(std::string_view name);

/// Instruction appended to prompts so the model replies in the expected format.
std::string format_instruction(const ExpectedFormat& format);

/// Parses `text` against the format. Freetext yields nullopt. Throws FormatError.
std::optional<json> parse_structured(std::string_view text, const ExpectedFormat& format);

/// Lowercase alphanumeric tokens.
std::vector<std::string> tokenize(std::string_view text);
/// Jaccard overlap of token sets, in [0, 1].
double token_overlap(std::string_view a, std::string_view b);

inline constexpr std::size_t kHashedEmbeddingDim = 64;
/// FNV-1a 64-bit of the token bytes.
std::uint64_t fnv1a64(std::string_view s);
/// Bag-of-tokens counts hashed into kHashedEmbeddingDim buckets, unit-normalised.
std::vector<double> hashed_embedding(std::string_view text);
double cosine_similarity(std::span<const double> a, std::span<const double> b);

class TextEngine {
public:
    virtual ~TextEngine() = default;
    virtual std::string complete(const BackendRequest& req) = 0;
    virtual std::vector<double> embed(std::string_view text) = 0;
    virtual std::string name() const = 0;
    virtual std::string model() const { return {}; }
    /// True when embeddings carry meaning (live model); false for hashed projections.
    virtual bool semantic_embeddings() const { return false; }
};

struct ScriptRule {
    std::string template_name;  // empty: any template
    std::string pattern;        // ECMAScript regex searched in the prompt; empty matches all
    std::string response;
};

class ScriptedEngine : public TextEngine {
public:
    explicit ScriptedEngine(std::vector<ScriptRule> rules = {});

    /// Rules file: {"rules": [{"template": ..., "match": ..., "response": ...}]}.
    static std::vector<ScriptRule> rules_from_json(const json& j);

    std::string complete(const BackendRequest& req) override;
    std::vector<double> embed(std::string_view text) override;
    std::string name() const override { return "scripted"; }

    /// Pins the embedding returned for an exact text.
    void set_embedding(std::string text, std::vector<double> vec);

    /// Response when no rule matches.
    static std::string default_response(const BackendRequest& req);

private:
    struct Compiled {
        ScriptRule rule;
        std::regex re;
    };
    std::vector<Compiled> rules_;
    std::map<std::string, std::vector<double>, std::less<>> pinned_;
};

struct TranscriptEntry {
    std::string digest;
    std::string template_name;
    std::string response;
};

/// Digest-to-response map persisted as JSON Lines. The first line carries
/// {"meta": {...}}; every other line is {"digest", "template", "response"}.
class Transcript {
public:
    struct Meta {
        std::string engine;
        std::string model;
        std::string created;
    };

    Meta meta;

    Transcript() = default;
    Transcript(const Transcript& other);
    Transcript& operator=(const Transcript& other);

    /// Throws BackendError when the digest is already bound to a different response.
    void add(const TranscriptEntry& entry);
    const TranscriptEntry* find(std::string_view digest) const;
    std::size_t size() const;

    static Transcript load(const std::filesystem::path& path);
    /// Entries written in digest order.
    void save(const std::filesystem::path& path) const;

private:
    mutable std::mutex mu_;
    std::map<std::string, TranscriptEntry, std::less<>> entries_;
};

class ReplayEngine : public TextEngine {
public:
    explicit ReplayEngine(std::shared_ptr<const Transcript> transcript);
    std::string complete(const BackendRequest& req) override;
    std::vector<double> embed(std::string_view text) override;
    std::string name() const override { return "replay"; }
    std::string model() const override;
    bool semantic_embeddings() const override;

private:
    std::shared_ptr<const Transcript> transcript_;
};

struct HttpConfig {
    std::string base_url = "http://127.0.0.1:8000";
    std::string chat_path = "/v1/chat/completions";
    std::string embed_path = "/v1/embeddings";
    std::string model = "llama-3-70b-instruct";
    std::string embedding_model;
    std::string api_key_env = "PSYA_API_KEY";
    int attempts = 3;
    std::chrono::milliseconds initial_backoff{500};
    double backoff_factor = 2.0;
    std::chrono::seconds timeout{120};
    int max_in_flight = 4;
};

class HttpEngine : public TextEngine {
public:
    explicit HttpEngine(HttpConfig config);
    ~HttpEngine() override;
    std::string complete(const BackendRequest& req) override;
    std::vector<double> embed(std::string_view text) override;
    std::string name() const override { return "http"; }
    std::string model() const override { return config_.model; }
    bool semantic_embeddings() const override { return true; }

    /// Request body sent for a completion.
    json chat_body(const BackendRequest& req) const;

private:
    json post_with_retry(const std::string& path, const json& body);

    HttpConfig config_;
    struct Limiter;
    std::unique_ptr<Limiter> limiter_;
};

/// Shared front door for generation. Thread-safe; engines are read-only after
/// construction apart from the HTTP in-flight limiter.
class Gateway {
public:
    explicit Gateway(std::shared_ptr<TextEngine> engine);

    /// Generates, parses against the expected format and re-asks once on a
    /// parse failure. Throws FormatError when the second reply also fails.
    BackendResponse generate(const BackendRequest& req);

    std::vector<double> embed(std::string_view text);

    /// Query/content relevance in [0, 1]: embedding cosine for semantic
    /// engines, token overlap otherwise.
    double relevance(std::string_view query, std::string_view content);

    /// Subsequent responses (and embeddings) are added to `transcript`.
    void record_into(std::shared_ptr<Transcript> transcript);

    const TextEngine& engine() const { return *engine_; }
    std::uint64_t call_count() const;

    /// Every (template, prompt) pair seen, in call order. Test support.
    std::vector<std::pair<std::string, std::string>> call_log() const;
    void keep_call_log(bool on);

private:
    std::string complete_and_record(const BackendRequest& req, const std::string& digest);

    std::shared_ptr<TextEngine> engine_;
    std::shared_ptr<Transcript> recorder_;
    mutable std::mutex mu_;
    std::uint64_t calls_ = 0;
    bool keep_log_ = false;
    std::vector<std::pair<std::string, std::string>> log_;
    std::map<std::string, std::vector<double>, std::less<>> embed_cache_;
};

/// Digest of an embedding request, used as the transcript key for embeddings.
std::string embedding_digest(std::string_view text);

}  // namespace psya
