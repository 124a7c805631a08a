#include "psya/memory.hpp"

#include "psya/backend.hpp"
#include "psya/templates.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

namespace psya {

using nlohmann::json;

RecordId MemoryStore::record_event(FullMemoryRecord record) {
    record.id = next_full_id_++;
    record.importance = std::clamp(record.importance, 0.0, 1.0);
    full_.push_back(std::move(record));
    return full_.back().id;
}

const FullMemoryRecord* MemoryStore::find(RecordId id) const {
    auto it = std::lower_bound(full_.begin(), full_.end(), id,
                               [](const FullMemoryRecord& r, RecordId v) { return r.id < v; });
    return it != full_.end() && it->id == id ? &*it : nullptr;
}

const RelationalMemoryRecord* MemoryStore::relation(const AgentId& other) const {
    auto it = relations_.find(other);
    return it == relations_.end() ? nullptr : &it->second;
}

double MemoryStore::score(const FullMemoryRecord& r, double relevance, Tick now, const RetrievalWeights& w) {
    const double age = static_cast<double>(std::max<Tick>(0, now - r.tick));
    const double recency = std::exp2(-age / w.recency_half_life);
    return w.relevance * relevance + w.recency * recency + w.importance * r.importance;
}

std::vector<FullMemoryRecord> MemoryStore::retrieve(std::string_view query, std::size_t k, Tick now,
                                                    const RetrievalWeights& weights,
                                                    const RelevanceFn& relevance) const {
    if (full_.empty() || k == 0) return {};
    struct Scored {
        double score;
        const FullMemoryRecord* rec;
    };
    std::vector<Scored> scored;
    scored.reserve(full_.size());
    for (const auto& r : full_) {
        const double rel = relevance ? relevance(query, r.content) : token_overlap(query, r.content);
        scored.push_back({score(r, rel, now, weights), &r});
    }
    std::sort(scored.begin(), scored.end(), [](const Scored& a, const Scored& b) {
        if (a.score != b.score) return a.score > b.score;
        if (a.rec->tick != b.rec->tick) return a.rec->tick > b.rec->tick;
        return a.rec->id > b.rec->id;
    });
    std::vector<FullMemoryRecord> out;
    for (std::size_t i = 0; i < std::min(k, scored.size()); ++i) out.push_back(*scored[i].rec);
    return out;
}

std::vector<FullMemoryRecord> MemoryStore::in_period(Period period) const {
    std::vector<FullMemoryRecord> out;
    for (const auto& r : full_)
        if (r.tick >= period.start && r.tick <= period.end) out.push_back(r);
    return out;
}

bool MemoryStore::survives(const FullMemoryRecord& r, const SummaryThresholds& t) {
    const bool unimportant = r.importance < t.importance;
    const bool neutral = r.emotional_response.distance_from_neutral() < t.emotion;
    return !(unimportant && neutral);
}

SummaryReport MemoryStore::summarize_tier(Period period, Gateway& gateway, const TemplateLibrary& templates,
                                          const std::string& persona, const std::string& name, const Clock& clock,
                                          const SummaryThresholds& thresholds) {
    SummaryReport report;
    const auto records = in_period(period);
    if (records.empty()) return report;

    // Group survivors by location, in order of first appearance.
    std::vector<std::pair<std::string, std::vector<const FullMemoryRecord*>>> groups;
    for (const auto& r : records) {
        if (!survives(r, thresholds)) {
            report.deleted.push_back(r.id);
            continue;
        }
        auto it = std::find_if(groups.begin(), groups.end(), [&](const auto& g) { return g.first == r.location; });
        if (it == groups.end()) {
            groups.push_back({r.location, {}});
            it = std::prev(groups.end());
        }
        it->second.push_back(&r);
    }

    // Every backend call happens before the store is touched.
    std::vector<SummarizedMemoryRecord> created;
    try {
        for (const auto& [location, members] : groups) {
            std::string lines;
            double importance = 0.0;
            SummarizedMemoryRecord s;
            s.period_start = members.front()->tick;
            s.period_end = members.front()->tick;
            for (const auto* m : members) {
                lines += "- [" + clock.format(m->tick) + "] " + m->content + "\n";
                importance = std::max(importance, m->importance);
                s.period_start = std::min(s.period_start, m->tick);
                s.period_end = std::max(s.period_end, m->tick);
                s.provenance.push_back(m->id);
            }
            TemplateVars vars{{"persona", persona},
                              {"name", name},
                              {"location", location.empty() ? "unknown place" : location},
                              {"period", clock.format(s.period_start) + " and " + clock.format(s.period_end)},
                              {"records", lines}};
            const auto resp = gateway.generate(templates.request("summarize_memories", vars, ExpectedFormat::freetext()));
            s.insight = resp.text;
            s.importance = importance;
            created.push_back(std::move(s));
        }
    } catch (const BackendError& e) {
        report.deleted.clear();
        report.deferred = true;
        report.error = e.what();
        return report;
    }

    for (auto& s : created) {
        s.id = next_summary_id_++;
        summarized_.push_back(s);
        report.created.push_back(s);
    }
    std::erase_if(full_, [&](const FullMemoryRecord& r) { return r.tick >= period.start && r.tick <= period.end; });
    return report;
}

RecordId MemoryStore::add_summary(SummarizedMemoryRecord record) {
    record.id = next_summary_id_++;
    record.importance = std::clamp(record.importance, 0.0, 1.0);
    summarized_.push_back(std::move(record));
    return summarized_.back().id;
}

RelationalMemoryRecord MemoryStore::update_relationship(const AgentId& other, double delta_intimacy,
                                                        const std::string& impression,
                                                        std::optional<Interaction> interaction) {
    auto [it, inserted] = relations_.try_emplace(other);
    auto& rec = it->second;
    if (inserted) rec.other = other;
    rec.intimacy = std::clamp(rec.intimacy + delta_intimacy, 0.0, 1.0);
    if (!impression.empty()) rec.impression = impression;
    if (interaction) rec.interactions.push_back(std::move(*interaction));
    return rec;
}

void MemoryStore::seed_relationship(const AgentId& other, std::string kind, double intimacy) {
    auto& rec = relations_[other];
    rec.other = other;
    rec.relationship_kind = std::move(kind);
    rec.intimacy = std::clamp(intimacy, 0.0, 1.0);
}

void MemoryStore::set_impression(const AgentId& other, std::string impression) {
    auto [it, inserted] = relations_.try_emplace(other);
    if (inserted) it->second.other = other;
    it->second.impression = std::move(impression);
}

bool operator==(const MemoryStore& a, const MemoryStore& b) {
    auto dump_all = [](const MemoryStore& s) {
        json j = json::array();
        for (const auto& r : s.full_) j.push_back(to_json(r));
        for (const auto& r : s.summarized_) j.push_back(to_json(r));
        for (const auto& [k, r] : s.relations_) j.push_back(to_json(r));
        j.push_back(s.next_full_id_);
        j.push_back(s.next_summary_id_);
        return j.dump();
    };
    return dump_all(a) == dump_all(b);
}

// ---------------------------------------------------------------------------
// JSON forms

json to_json(const EmotionVector& e) {
    json j = json::object();
    for (Emotion k : kAllEmotions) j[std::string(to_string(k))] = e[k];
    return j;
}

EmotionVector emotion_vector_from_json(const json& j) {
    EmotionVector e;
    for (Emotion k : kAllEmotions) e[k] = j.value(std::string(to_string(k)), 0.5);
    return e;
}

json to_json(const FullMemoryRecord& r) {
    return json{{"id", r.id},
                {"tick", r.tick},
                {"location", r.location},
                {"content", r.content},
                {"importance", r.importance},
                {"emotional_response", to_json(r.emotional_response)},
                {"imagined", r.imagined},
                {"inspiration", r.inspiration}};
}

FullMemoryRecord full_record_from_json(const json& j) {
    FullMemoryRecord r;
    r.id = j.at("id").get<RecordId>();
    r.tick = j.at("tick").get<Tick>();
    r.location = j.value("location", "");
    r.content = j.value("content", "");
    r.importance = j.value("importance", 0.0);
    if (j.contains("emotional_response")) r.emotional_response = emotion_vector_from_json(j["emotional_response"]);
    r.imagined = j.value("imagined", false);
    r.inspiration = j.value("inspiration", false);
    return r;
}

json to_json(const SummarizedMemoryRecord& r) {
    return json{{"id", r.id},
                {"period_start", r.period_start},
                {"period_end", r.period_end},
                {"insight", r.insight},
                {"importance", r.importance},
                {"provenance", r.provenance}};
}

SummarizedMemoryRecord summary_record_from_json(const json& j) {
    SummarizedMemoryRecord r;
    r.id = j.at("id").get<RecordId>();
    r.period_start = j.value("period_start", Tick{0});
    r.period_end = j.value("period_end", Tick{0});
    r.insight = j.value("insight", "");
    r.importance = j.value("importance", 0.0);
    r.provenance = j.value("provenance", std::vector<RecordId>{});
    return r;
}

json to_json(const RelationalMemoryRecord& r) {
    json inter = json::array();
    for (const auto& i : r.interactions)
        inter.push_back(json{{"tick", i.tick}, {"location", i.location}, {"summary", i.summary}});
    return json{{"other", r.other},
                {"relationship_kind", r.relationship_kind},
                {"intimacy", r.intimacy},
                {"impression", r.impression},
                {"interactions", inter}};
}

RelationalMemoryRecord relational_record_from_json(const json& j) {
    RelationalMemoryRecord r;
    r.other = j.at("other").get<std::string>();
    r.relationship_kind = j.value("relationship_kind", "stranger");
    r.intimacy = j.value("intimacy", 0.5);
    r.impression = j.value("impression", "");
    for (const auto& i : j.value("interactions", json::array()))
        r.interactions.push_back({i.value("tick", Tick{0}), i.value("location", ""), i.value("summary", "")});
    return r;
}

// ---------------------------------------------------------------------------
// Persistence

namespace {

void write_lines(const std::filesystem::path& path, const std::vector<json>& lines) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    for (const auto& l : lines) out << l.dump() << "\n";
}

std::vector<json> read_lines(const std::filesystem::path& path) {
    std::vector<json> out;
    std::ifstream in(path);
    if (!in) return out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded()) throw std::runtime_error("corrupt memory file " + path.string());
        out.push_back(std::move(j));
    }
    return out;
}

}  // namespace

void MemoryStore::save(const std::filesystem::path& dir, const AgentId& agent) const {
    std::filesystem::create_directories(dir);
    std::vector<json> lines;
    for (const auto& r : full_) lines.push_back(to_json(r));
    write_lines(dir / (agent + ".full.jsonl"), lines);
    lines.clear();
    for (const auto& r : summarized_) lines.push_back(to_json(r));
    write_lines(dir / (agent + ".summarized.jsonl"), lines);
    lines.clear();
    for (const auto& [_, r] : relations_) lines.push_back(to_json(r));
    write_lines(dir / (agent + ".relational.jsonl"), lines);
    std::ofstream meta(dir / (agent + ".meta.json"), std::ios::trunc);
    meta << json{{"next_full_id", next_full_id_}, {"next_summary_id", next_summary_id_}}.dump() << "\n";
}

MemoryStore MemoryStore::load(const std::filesystem::path& dir, const AgentId& agent) {
    MemoryStore s;
    for (const auto& j : read_lines(dir / (agent + ".full.jsonl"))) s.full_.push_back(full_record_from_json(j));
    for (const auto& j : read_lines(dir / (agent + ".summarized.jsonl")))
        s.summarized_.push_back(summary_record_from_json(j));
    for (const auto& j : read_lines(dir / (agent + ".relational.jsonl"))) {
        auto r = relational_record_from_json(j);
        s.relations_[r.other] = std::move(r);
    }
    RecordId max_full = 0, max_sum = 0;
    for (const auto& r : s.full_) max_full = std::max(max_full, r.id);
    for (const auto& r : s.summarized_) max_sum = std::max(max_sum, r.id);
    s.next_full_id_ = max_full + 1;
    s.next_summary_id_ = max_sum + 1;
    std::ifstream meta(dir / (agent + ".meta.json"));
    if (meta) {
        json m = json::parse(meta, nullptr, false);
        if (!m.is_discarded()) {
            s.next_full_id_ = std::max(s.next_full_id_, m.value("next_full_id", RecordId{1}));
            s.next_summary_id_ = std::max(s.next_summary_id_, m.value("next_summary_id", RecordId{1}));
        }
    }
    return s;
}

}  // namespace psya
