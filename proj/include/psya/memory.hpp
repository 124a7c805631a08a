#pragma once

// Three-tier agent memory: full (short-term), summarized (long-term insights)
// and relational (one record per other agent).

#include "psya/affect.hpp"
#include "psya/agent.hpp"
#include "psya/clock.hpp"

#include <json.hpp>

#include <cstdint>
#include <functional>
#include <string_view>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace psya {

class Gateway;
class TemplateLibrary;

using RecordId = std::uint64_t;

struct FullMemoryRecord {
    RecordId id = 0;
    Tick tick = 0;
    std::string location;
    std::string content;
    double importance = 0.0;
    /// Emotion state attached to the experience; all-0.5 means neutral.
    EmotionVector emotional_response;
    bool imagined = false;
    bool inspiration = false;
};

struct SummarizedMemoryRecord {
    RecordId id = 0;
    Tick period_start = 0;
    Tick period_end = 0;
    std::string insight;
    double importance = 0.0;
    std::vector<RecordId> provenance;
};

struct Interaction {
    Tick tick = 0;
    std::string location;
    std::string summary;
};

struct RelationalMemoryRecord {
    AgentId other;
    std::string relationship_kind = "stranger";
    double intimacy = 0.5;
    std::string impression;
    std::vector<Interaction> interactions;
};

struct RetrievalWeights {
    double relevance = 0.5;
    double recency = 0.3;
    double importance = 0.2;
    /// Age (ticks) at which the recency term has fallen to 0.5; 96 = 24 h of 15-minute ticks.
    double recency_half_life = 96.0;
};

struct SummaryThresholds {
    double importance = 0.3;
    double emotion = 0.1;
};

/// Closed tick interval [start, end].
struct Period {
    Tick start = 0;
    Tick end = 0;
};

/// Outcome of a summarization pass.
struct SummaryReport {
    std::vector<SummarizedMemoryRecord> created;
    std::vector<RecordId> deleted;
    bool deferred = false;
    std::string error;
};

/// Relevance of a record's content to a query, in [0, 1].
using RelevanceFn = std::function<double(std::string_view query, std::string_view content)>;

class MemoryStore {
public:
    /// Appends to the full tier, assigning the next id (ids start at 1).
    RecordId record_event(FullMemoryRecord record);

    const std::vector<FullMemoryRecord>& full() const { return full_; }
    const std::vector<SummarizedMemoryRecord>& summarized() const { return summarized_; }
    const std::map<AgentId, RelationalMemoryRecord>& relations() const { return relations_; }

    const FullMemoryRecord* find(RecordId id) const;
    const RelationalMemoryRecord* relation(const AgentId& other) const;

    /// Top-k full-tier records by weighted relevance, recency and importance.
    /// Ties go to the newer record, then the higher id. `relevance` defaults to token overlap.
    std::vector<FullMemoryRecord> retrieve(std::string_view query, std::size_t k, Tick now,
                                           const RetrievalWeights& weights = {},
                                           const RelevanceFn& relevance = {}) const;

    /// Score used by retrieve(); exposed for tests.
    static double score(const FullMemoryRecord& r, double relevance, Tick now, const RetrievalWeights& w);

    /// Records in the closed period, in id order.
    std::vector<FullMemoryRecord> in_period(Period period) const;

    /// Records in the period that survive the deletion rule.
    static bool survives(const FullMemoryRecord& r, const SummaryThresholds& t);

    /// Drops unimportant, emotionally neutral records from the period, distils
    /// the rest (grouped by location) into insights with one backend call per
    /// group, and moves them out of the full tier. On backend failure nothing
    /// changes and the report is marked deferred.
    SummaryReport summarize_tier(Period period, Gateway& gateway, const TemplateLibrary& templates,
                                 const std::string& persona, const std::string& name, const Clock& clock,
                                 const SummaryThresholds& thresholds = {});

    /// Adds an insight record directly (reflection output).
    RecordId add_summary(SummarizedMemoryRecord record);

    /// Creates the record as a stranger at intimacy 0.5 when missing, then
    /// applies the delta (clamped), replaces the impression when non-empty
    /// and appends the interaction.
    RelationalMemoryRecord update_relationship(const AgentId& other, double delta_intimacy,
                                               const std::string& impression,
                                               std::optional<Interaction> interaction);

    /// Seeds a relationship (kind and intimacy) without an interaction.
    void seed_relationship(const AgentId& other, std::string kind, double intimacy);
    void set_impression(const AgentId& other, std::string impression);

    /// Writes <agent>.full.jsonl, <agent>.summarized.jsonl, <agent>.relational.jsonl and <agent>.meta.json.
    void save(const std::filesystem::path& dir, const AgentId& agent) const;
    static MemoryStore load(const std::filesystem::path& dir, const AgentId& agent);

    RecordId next_full_id() const { return next_full_id_; }
    RecordId next_summary_id() const { return next_summary_id_; }

    friend bool operator==(const MemoryStore& a, const MemoryStore& b);

private:
    std::vector<FullMemoryRecord> full_;
    std::vector<SummarizedMemoryRecord> summarized_;
    std::map<AgentId, RelationalMemoryRecord> relations_;
    RecordId next_full_id_ = 1;
    RecordId next_summary_id_ = 1;
};

/// JSON forms shared by persistence and the trajectory log.
nlohmann::json to_json(const EmotionVector& e);
EmotionVector emotion_vector_from_json(const nlohmann::json& j);
nlohmann::json to_json(const FullMemoryRecord& r);
FullMemoryRecord full_record_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SummarizedMemoryRecord& r);
SummarizedMemoryRecord summary_record_from_json(const nlohmann::json& j);
nlohmann::json to_json(const RelationalMemoryRecord& r);
RelationalMemoryRecord relational_record_from_json(const nlohmann::json& j);

}  // namespace psya
