#include "psya/backend.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

namespace psya {

namespace {

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    return out;
}

std::string_view kind_name(FormatKind k) {
    switch (k) {
        case FormatKind::Freetext: return "freetext";
        case FormatKind::Choice: return "choice";
        case FormatKind::Scores: return "scores";
        case FormatKind::JsonSchema: return "json_schema";
    }
    return "freetext";
}

bool is_word_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

// First occurrence of `needle` in `hay` that starts and ends on word boundaries.
std::size_t find_word(const std::string& hay, const std::string& needle) {
    if (needle.empty()) return std::string::npos;
    std::size_t pos = hay.find(needle);
    while (pos != std::string::npos) {
        const bool left = pos == 0 || !is_word_char(hay[pos - 1]) || !is_word_char(needle.front());
        const std::size_t end = pos + needle.size();
        const bool right = end >= hay.size() || !is_word_char(hay[end]) || !is_word_char(needle.back());
        if (left && right) return pos;
        pos = hay.find(needle, pos + 1);
    }
    return std::string::npos;
}

const std::vector<SchemaSpec>& schema_registry() {
    static const std::vector<SchemaSpec> kSchemas = {
        {"day_plan",
         R"({"entries": [)"
         R"({"start": "06:00", "end": "07:00", "activity": "wake up and have breakfast", "location": "home", "importance": 0.3}, )"
         R"({"start": "07:00", "end": "07:30", "activity": "commute to work", "location": "central square", "importance": 0.2}, )"
         R"({"start": "07:30", "end": "12:00", "activity": "work", "location": "workplace", "importance": 0.8}, )"
         R"({"start": "12:00", "end": "13:00", "activity": "have lunch", "location": "restaurant", "importance": 0.4}, )"
         R"({"start": "13:00", "end": "17:00", "activity": "work", "location": "workplace", "importance": 0.8}, )"
         R"({"start": "17:00", "end": "18:00", "activity": "take a walk in the park", "location": "park", "importance": 0.3}, )"
         R"({"start": "18:00", "end": "19:00", "activity": "have dinner", "location": "home", "importance": 0.4}, )"
         R"({"start": "19:00", "end": "21:00", "activity": "chat with friends at the cafe", "location": "cafe", "importance": 0.5}, )"
         R"({"start": "21:00", "end": "23:00", "activity": "read a book", "location": "home", "importance": 0.3}, )"
         R"({"start": "23:00", "end": "24:00", "activity": "rest and get ready for bed", "location": "home", "importance": 0.2}]})",
         {"entries"}},
        {"reflection", R"({"insight": "I keep a steady routine and value the people around me.", "importance": 0.6})",
         {"insight", "importance"}},
        {"scenario",
         R"({"scenario": "I picture how it could go and feel more prepared for it.", "emotion": "happiness", "intensity": 0.55})",
         {"scenario"}},
        {"self_reflection",
         R"({"self_view": "I think I am a considerate person who likes order.", "impression": "They seem friendly and open."})",
         {"self_view"}},
        {"conversation_summary",
         R"({"summary": "They exchanged news about their day.", "intimacy_delta": {"initiator": 0.05, "partner": 0.05}, )"
         R"("impressions": {"initiator": "pleasant to talk to", "partner": "pleasant to talk to"}, "commitments": []})",
         {"summary"}},
        {"emotion_rating", R"({"emotion": "happiness", "intensity": 0.55})", {"emotion", "intensity"}},
        {"action_sequence",
         R"({"actions": ["call for help", "notify the experimenter", "continue the discussion", "wait and listen", "leave the room", "do nothing"]})",
         {"actions"}},
    };
    return kSchemas;
}

}  // namespace

ReplayMissError::ReplayMissError(std::string digest, std::string template_name)
    : BackendError("replay transcript has no response for request digest " + digest + " (template '" +
                   template_name + "'); the prompt differs from the recorded run"),
      digest_(std::move(digest)),
      template_(std::move(template_name)) {}

json canonical_request(const BackendRequest& req) {
    const auto& f = req.constraints.format;
    json format = {{"kind", kind_name(f.kind)},
                   {"options", f.options},
                   {"score_count", f.score_count},
                   {"schema", f.schema}};
    json constraints = {{"max_tokens", req.constraints.max_tokens},
                        {"temperature", req.constraints.temperature},
                        {"seed", req.constraints.seed},
                        {"format", format}};
    return json{{"template", req.template_name}, {"prompt", req.rendered_prompt}, {"constraints", constraints}};
}

std::string sha256_hex(std::string_view data) {
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), md.data(), &len, EVP_sha256(), nullptr) != 1)
        throw std::runtime_error("sha256 failed");
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out;
    out.reserve(len * 2);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(kHex[md[i] >> 4]);
        out.push_back(kHex[md[i] & 0xF]);
    }
    return out;
}

std::string request_digest(const BackendRequest& req) { return sha256_hex(canonical_request(req).dump()); }

std::string embedding_digest(std::string_view text) { return sha256_hex("embed\n" + std::string(text)); }

const SchemaSpec* find_schema(std::string_view name) {
    for (const auto& s : schema_registry())
        if (s.name == name) return &s;
    return nullptr;
}

std::string format_instruction(const ExpectedFormat& format) {
    switch (format.kind) {
        case FormatKind::Freetext: return {};
        case FormatKind::Choice: {
            std::string out = "Answer with exactly one of the following options: ";
            for (std::size_t i = 0; i < format.options.size(); ++i) {
                if (i) out += " | ";
                out += format.options[i];
            }
            return out + ".";
        }
        case FormatKind::Scores:
            return "Answer with exactly " + std::to_string(format.score_count) +
                   " number(s), separated by spaces, and nothing else.";
        case FormatKind::JsonSchema: {
            const auto* s = find_schema(format.schema);
            if (!s) throw ConfigurationError("unknown output schema: " + format.schema);
            return "Reply with a single JSON object shaped like this example and nothing else:\n" + s->example;
        }
    }
    return {};
}

std::optional<json> parse_structured(std::string_view text, const ExpectedFormat& format) {
    switch (format.kind) {
        case FormatKind::Freetext: return std::nullopt;
        case FormatKind::Choice: {
            if (format.options.empty()) throw ConfigurationError("choice format with no options");
            const std::string hay = lower(text);
            std::size_t best_pos = std::string::npos;
            const std::string* best = nullptr;
            for (const auto& opt : format.options) {
                const auto pos = find_word(hay, lower(opt));
                if (pos == std::string::npos) continue;
                if (!best || pos < best_pos || (pos == best_pos && opt.size() > best->size())) {
                    best = &opt;
                    best_pos = pos;
                }
            }
            if (!best) throw FormatError("reply matches none of the offered options", std::string(text));
            return json(*best);
        }
        case FormatKind::Scores: {
            static const std::regex kNumber(R"([-+]?\d+(?:\.\d+)?)");
            json values = json::array();
            const std::string s(text);
            for (auto it = std::sregex_iterator(s.begin(), s.end(), kNumber);
                 it != std::sregex_iterator() && static_cast<int>(values.size()) < format.score_count; ++it)
                values.push_back(std::stod(it->str()));
            if (static_cast<int>(values.size()) < format.score_count)
                throw FormatError("expected " + std::to_string(format.score_count) + " numbers, found " +
                                      std::to_string(values.size()),
                                  s);
            return values;
        }
        case FormatKind::JsonSchema: {
            const auto* spec = find_schema(format.schema);
            if (!spec) throw ConfigurationError("unknown output schema: " + format.schema);
            const auto open = text.find('{');
            const auto close = text.rfind('}');
            if (open == std::string_view::npos || close == std::string_view::npos || close < open)
                throw FormatError("reply contains no JSON object", std::string(text));
            json j = json::parse(text.substr(open, close - open + 1), nullptr, false);
            if (j.is_discarded() || !j.is_object()) throw FormatError("reply is not valid JSON", std::string(text));
            for (const auto& key : spec->required_keys)
                if (!j.contains(key))
                    throw FormatError("reply is missing required key '" + key + "'", std::string(text));
            return j;
        }
    }
    return std::nullopt;
}

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : text) {
        const auto c = static_cast<unsigned char>(ch);
        if (std::isalnum(c)) {
            cur.push_back(static_cast<char>(std::tolower(c)));
        } else if (!cur.empty()) {
            out.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

double token_overlap(std::string_view a, std::string_view b) {
    auto ta = tokenize(a);
    auto tb = tokenize(b);
    std::sort(ta.begin(), ta.end());
    ta.erase(std::unique(ta.begin(), ta.end()), ta.end());
    std::sort(tb.begin(), tb.end());
    tb.erase(std::unique(tb.begin(), tb.end()), tb.end());
    if (ta.empty() && tb.empty()) return 0.0;
    std::vector<std::string> common;
    std::set_intersection(ta.begin(), ta.end(), tb.begin(), tb.end(), std::back_inserter(common));
    const double uni = static_cast<double>(ta.size() + tb.size() - common.size());
    return static_cast<double>(common.size()) / uni;
}

std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::vector<double> hashed_embedding(std::string_view text) {
    std::vector<double> v(kHashedEmbeddingDim, 0.0);
    for (const auto& tok : tokenize(text)) v[fnv1a64(tok) % kHashedEmbeddingDim] += 1.0;
    double n = 0.0;
    for (double x : v) n += x * x;
    if (n > 0.0) {
        n = std::sqrt(n);
        for (double& x : v) x /= n;
    }
    return v;
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
    const std::size_t n = std::min(a.size(), b.size());
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

// ---------------------------------------------------------------------------
// Scripted engine

namespace {

// Built-in rules consulted after user rules, so daily-life runs produce
// activities that map onto needs and locations.
const std::vector<ScriptRule>& builtin_rules() {
    static const std::vector<ScriptRule> kRules = {
        {"decide_activity", "driven by the need: fullness", "have a meal at the restaurant"},
        {"decide_activity", "driven by the need: fun", "play a board game with friends at the park"},
        {"decide_activity", "driven by the need: health", "visit the clinic for a check-up"},
        {"decide_activity", "driven by the need: social", "chat with friends at the cafe"},
        {"decide_activity", "driven by the need: energy", "take a nap at home"},
        {"decide_activity", "driven by the emotion: sadness", "take a walk in the park to clear my head"},
        {"decide_activity", "driven by the emotion: anger", "go for a walk to calm down"},
        {"decide_activity", "driven by the emotion: fear", "chat with a friend for reassurance"},
        {"decide_activity", "driven by the emotion: disgust", "tidy up at home"},
        {"converse_turn", "", "Nice to see you. How has your day been going?"},
        {"summarize_memories", "", "A routine stretch of the day that went as expected."},
        {"mind_wandering", "", "My thoughts drift to something I would like to try someday."},
    };
    return kRules;
}

}  // namespace

ScriptedEngine::ScriptedEngine(std::vector<ScriptRule> rules) {
    for (auto& r : rules) {
        Compiled c{r, std::regex(r.pattern, std::regex::ECMAScript | std::regex::icase)};
        rules_.push_back(std::move(c));
    }
    for (const auto& r : builtin_rules())
        rules_.push_back({r, std::regex(r.pattern, std::regex::ECMAScript | std::regex::icase)});
}

std::vector<ScriptRule> ScriptedEngine::rules_from_json(const json& j) {
    std::vector<ScriptRule> out;
    const json& arr = j.is_array() ? j : j.value("rules", json::array());
    for (const auto& r : arr) {
        ScriptRule rule;
        rule.template_name = r.value("template", "");
        rule.pattern = r.value("match", "");
        if (!r.contains("response")) throw ConfigurationError("script rule without a response");
        rule.response = r["response"].is_string() ? r["response"].get<std::string>() : r["response"].dump();
        try {
            std::regex test(rule.pattern, std::regex::ECMAScript | std::regex::icase);
        } catch (const std::regex_error& e) {
            throw ConfigurationError("invalid script pattern '" + rule.pattern + "': " + e.what());
        }
        out.push_back(std::move(rule));
    }
    return out;
}

std::string ScriptedEngine::default_response(const BackendRequest& req) {
    const auto& f = req.constraints.format;
    switch (f.kind) {
        case FormatKind::Choice: return f.options.empty() ? std::string{} : f.options.front();
        case FormatKind::Scores: {
            std::string out;
            for (int i = 0; i < f.score_count; ++i) out += i ? " 0.5" : "0.5";
            return out;
        }
        case FormatKind::JsonSchema: {
            const auto* s = find_schema(f.schema);
            return s ? s->example : "{}";
        }
        case FormatKind::Freetext: break;
    }
    return "I carry on with what I was doing.";
}

std::string ScriptedEngine::complete(const BackendRequest& req) {
    for (const auto& c : rules_) {
        if (!c.rule.template_name.empty() && c.rule.template_name != req.template_name) continue;
        if (c.rule.pattern.empty() || std::regex_search(req.rendered_prompt, c.re)) return c.rule.response;
    }
    return default_response(req);
}

std::vector<double> ScriptedEngine::embed(std::string_view text) {
    if (auto it = pinned_.find(text); it != pinned_.end()) return it->second;
    return hashed_embedding(text);
}

void ScriptedEngine::set_embedding(std::string text, std::vector<double> vec) {
    pinned_[std::move(text)] = std::move(vec);
}

// ---------------------------------------------------------------------------
// Transcript and replay

Transcript::Transcript(const Transcript& other) : meta(other.meta) {
    std::lock_guard lock(other.mu_);
    entries_ = other.entries_;
}

Transcript& Transcript::operator=(const Transcript& other) {
    if (this == &other) return *this;
    std::scoped_lock lock(mu_, other.mu_);
    meta = other.meta;
    entries_ = other.entries_;
    return *this;
}

void Transcript::add(const TranscriptEntry& entry) {
    std::lock_guard lock(mu_);
    auto [it, inserted] = entries_.emplace(entry.digest, entry);
    if (!inserted && it->second.response != entry.response)
        throw BackendError("transcript digest collision for " + entry.digest + " (template '" +
                           entry.template_name + "')");
}

const TranscriptEntry* Transcript::find(std::string_view digest) const {
    std::lock_guard lock(mu_);
    auto it = entries_.find(digest);
    return it == entries_.end() ? nullptr : &it->second;
}

std::size_t Transcript::size() const {
    std::lock_guard lock(mu_);
    return entries_.size();
}

Transcript Transcript::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigurationError("cannot open transcript " + path.string());
    Transcript t;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded()) throw ConfigurationError(path.string() + ":" + std::to_string(lineno) + ": bad JSON");
        if (j.contains("meta")) {
            const auto& m = j["meta"];
            t.meta = {m.value("engine", ""), m.value("model", ""), m.value("created", "")};
            continue;
        }
        t.add({j.at("digest").get<std::string>(), j.value("template", ""), j.at("response").get<std::string>()});
    }
    return t;
}

void Transcript::save(const std::filesystem::path& path) const {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw ConfigurationError("cannot write transcript " + path.string());
    out << json{{"meta", {{"engine", meta.engine}, {"model", meta.model}, {"created", meta.created}}}}.dump() << "\n";
    std::lock_guard lock(mu_);
    for (const auto& [digest, e] : entries_)
        out << json{{"digest", digest}, {"template", e.template_name}, {"response", e.response}}.dump() << "\n";
}

ReplayEngine::ReplayEngine(std::shared_ptr<const Transcript> transcript) : transcript_(std::move(transcript)) {}

std::string ReplayEngine::complete(const BackendRequest& req) {
    const auto digest = request_digest(req);
    if (const auto* e = transcript_->find(digest)) return e->response;
    throw ReplayMissError(digest, req.template_name);
}

std::vector<double> ReplayEngine::embed(std::string_view text) {
    if (const auto* e = transcript_->find(embedding_digest(text))) {
        json j = json::parse(e->response, nullptr, false);
        if (j.is_array()) return j.get<std::vector<double>>();
    }
    return hashed_embedding(text);
}

std::string ReplayEngine::model() const { return transcript_->meta.model; }

bool ReplayEngine::semantic_embeddings() const { return transcript_->meta.engine == "http"; }

// ---------------------------------------------------------------------------
// Gateway

Gateway::Gateway(std::shared_ptr<TextEngine> engine) : engine_(std::move(engine)) {
    if (!engine_) throw ConfigurationError("gateway requires an engine");
}

void Gateway::record_into(std::shared_ptr<Transcript> transcript) {
    std::lock_guard lock(mu_);
    recorder_ = std::move(transcript);
    if (recorder_ && recorder_->meta.engine.empty()) {
        recorder_->meta.engine = engine_->name();
        recorder_->meta.model = engine_->model();
    }
}

std::uint64_t Gateway::call_count() const {
    std::lock_guard lock(mu_);
    return calls_;
}

std::vector<std::pair<std::string, std::string>> Gateway::call_log() const {
    std::lock_guard lock(mu_);
    return log_;
}

void Gateway::keep_call_log(bool on) {
    std::lock_guard lock(mu_);
    keep_log_ = on;
}

std::string Gateway::complete_and_record(const BackendRequest& req, const std::string& digest) {
    if (req.rendered_prompt.empty()) throw ConfigurationError("empty prompt for template " + req.template_name);
    std::shared_ptr<Transcript> recorder;
    {
        std::lock_guard lock(mu_);
        ++calls_;
        if (keep_log_) log_.emplace_back(req.template_name, req.rendered_prompt);
        recorder = recorder_;
    }
    std::string text = engine_->complete(req);
    if (recorder) recorder->add({digest, req.template_name, text});
    return text;
}

BackendResponse Gateway::generate(const BackendRequest& req) {
    if (req.constraints.format.kind == FormatKind::Choice && req.constraints.format.options.empty())
        throw ConfigurationError("choice request without options: " + req.template_name);
    BackendResponse resp;
    resp.hash_key = request_digest(req);
    resp.text = complete_and_record(req, resp.hash_key);
    try {
        resp.parsed = parse_structured(resp.text, req.constraints.format);
    } catch (const FormatError& first) {
        BackendRequest again = req;
        again.rendered_prompt += "\n\nYour previous reply could not be used (" + std::string(first.what()) +
                                 "). Reply again, strictly in the required format.";
        resp.text = complete_and_record(again, request_digest(again));
        resp.parsed = parse_structured(resp.text, req.constraints.format);
    }
    resp.usage.prompt_tokens = static_cast<int>(tokenize(req.rendered_prompt).size());
    resp.usage.completion_tokens = static_cast<int>(tokenize(resp.text).size());
    return resp;
}

std::vector<double> Gateway::embed(std::string_view text) {
    std::shared_ptr<Transcript> recorder;
    {
        std::lock_guard lock(mu_);
        if (auto it = embed_cache_.find(text); it != embed_cache_.end()) return it->second;
        recorder = recorder_;
    }
    auto vec = engine_->embed(text);
    if (recorder) recorder->add({embedding_digest(text), "embed", json(vec).dump()});
    std::lock_guard lock(mu_);
    embed_cache_.emplace(std::string(text), vec);
    return vec;
}

double Gateway::relevance(std::string_view query, std::string_view content) {
    if (!engine_->semantic_embeddings()) return token_overlap(query, content);
    const auto a = embed(query);
    const auto b = embed(content);
    return std::clamp(cosine_similarity(a, b), 0.0, 1.0);
}

}  // namespace psya
