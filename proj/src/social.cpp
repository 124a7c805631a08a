#include "psya/social.hpp"

#include "psya/cognition.hpp"

#include <algorithm>
#include <sstream>

namespace psya {

double conversation_probability(double intimacy, double social_need, const TriggerParams& params) {
    return std::clamp(params.base + params.intimacy_weight * intimacy + params.social_weight * (1.0 - social_need),
                      0.0, 1.0);
}

TriggerDecision should_converse(const EncounterContext& ctx, const NeedsState& needs,
                                const RelationalMemoryRecord* relation, Rng& rng, Gateway& gateway,
                                const TemplateLibrary& templates, const AgentProfile& self,
                                const TriggerParams& params) {
    TriggerDecision d;
    double intimacy = 0.0;
    if (ctx.acquainted && relation) {
        intimacy = relation->intimacy;
    } else {
        TemplateVars vars{{"persona", self.describe()},
                          {"location", ctx.location},
                          {"name", self.name},
                          {"appearance", ctx.other_surface.appearance.empty() ? "ordinary" : ctx.other_surface.appearance},
                          {"behavior", ctx.other_surface.behavior.empty() ? "standing around" : ctx.other_surface.behavior}};
        const auto resp = gateway.generate(
            templates.request("stranger_judgment", vars, ExpectedFormat::choice({"approach", "avoid"})));
        d.judged = true;
        d.judgment = resp.parsed->get<std::string>();
        if (d.judgment != "approach") return d;
    }
    d.probability = conversation_probability(intimacy, needs[Need::Social], params);
    d.converse = rng.bernoulli(d.probability);
    return d;
}

json to_json(const ConversationRecord& r, const Clock& clock) {
    json turns = json::array();
    for (const auto& t : r.turns) turns.push_back({{"speaker", t.speaker}, {"text", t.text}});
    json commitments = json::array();
    for (const auto& c : r.commitments) {
        json cj{{"text", c.text}, {"location", c.location}};
        if (c.due) cj["due"] = *c.due, cj["due_time"] = clock.format(*c.due);
        commitments.push_back(cj);
    }
    json emotions = json::array();
    for (const auto& e : r.emotions) {
        if (e)
            emotions.push_back({{"emotion", std::string(to_string(e->kind))}, {"intensity", e->base_intensity}});
        else
            emotions.push_back(nullptr);
    }
    json j{{"participants", r.participants},
           {"tick", r.tick},
           {"time", clock.format(r.tick)},
           {"location", r.location},
           {"turns", turns},
           {"summary", r.summary},
           {"commitments", commitments},
           {"intimacy_delta", r.intimacy_delta},
           {"impressions", r.impressions},
           {"emotions", emotions},
           {"interrupted", r.interrupted}};
    if (!r.error.empty()) j["error"] = r.error;
    return j;
}

namespace {

std::string relationship_text(const MemoryStore& memory, const AgentId& other) {
    const auto* rel = memory.relation(other);
    if (!rel) return "they have never met";
    std::ostringstream os;
    os.precision(2);
    os << std::fixed << rel->relationship_kind << ", closeness " << rel->intimacy;
    if (!rel->impression.empty()) os << "; impression: " << rel->impression;
    return os.str();
}

double delta_for(const json& j, const char* role, double cap) {
    if (!j.contains("intimacy_delta")) return 0.0;
    const auto& d = j["intimacy_delta"];
    double v = 0.0;
    if (d.is_number())
        v = d.get<double>();
    else if (d.is_object() && d.contains(role) && d[role].is_number())
        v = d[role].get<double>();
    return std::clamp(v, -cap, cap);
}

std::string impression_for(const json& j, const char* role) {
    if (!j.contains("impressions") || !j["impressions"].is_object()) return {};
    const auto& i = j["impressions"];
    if (!i.contains(role)) return {};
    return i[role].is_string() ? i[role].get<std::string>() : i[role].dump();
}

}  // namespace

ConversationRecord converse(Participant a, Participant b, Gateway& gateway, const TemplateLibrary& templates,
                            const Clock& clock, Tick now, const std::string& location, const AffectParams& affect,
                            const ConversationSettings& settings) {
    ConversationRecord rec;
    rec.participants = {a.profile.id, b.profile.id};
    rec.tick = now;
    rec.location = location;

    std::array<Participant*, 2> side{&a, &b};
    std::string history;
    json extracted;
    try {
        for (int turn = 0; turn < settings.max_turns; ++turn) {
            Participant& speaker = *side[turn % 2];
            Participant& listener = *side[(turn + 1) % 2];
            TemplateVars vars{{"persona", speaker.profile.describe()},
                              {"name", speaker.profile.name},
                              {"partner", listener.profile.name},
                              {"location", location},
                              {"relationship", relationship_text(speaker.memory, listener.profile.id)},
                              {"time", clock.format(now)},
                              {"mood", mood_text(speaker.affect.mood())},
                              {"history", history.empty() ? "(nothing yet)" : history},
                              {"turn", std::to_string(turn + 1)},
                              {"max_turns", std::to_string(settings.max_turns)}};
            auto text = gateway.generate(templates.request("converse_turn", vars, ExpectedFormat::freetext())).text;
            bool done = false;
            if (auto pos = text.find(settings.end_marker); pos != std::string::npos) {
                text.erase(pos, settings.end_marker.size());
                while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) text.pop_back();
                done = true;
            }
            rec.turns.push_back({speaker.profile.id, text});
            history += speaker.profile.name + ": " + text + "\n";
            if (done) break;
        }

        TemplateVars vars{{"initiator", a.profile.name},
                          {"partner", b.profile.name},
                          {"location", location},
                          {"time", clock.format(now)},
                          {"transcript", history}};
        extracted = *gateway
                         .generate(templates.request("converse_extract", vars,
                                                     ExpectedFormat::json_schema("conversation_summary")))
                         .parsed;
    } catch (const BackendError& err) {
        rec.interrupted = true;
        rec.backend_unavailable = dynamic_cast<const BackendUnavailableError*>(&err) != nullptr;
        rec.error = err.what();
        rec.summary = "interrupted";
    }

    if (!rec.interrupted) {
        rec.summary = extracted.at("summary").is_string() ? extracted["summary"].get<std::string>()
                                                          : extracted["summary"].dump();
        rec.intimacy_delta = {delta_for(extracted, "initiator", settings.max_intimacy_delta),
                              delta_for(extracted, "partner", settings.max_intimacy_delta)};
        rec.impressions = {impression_for(extracted, "initiator"), impression_for(extracted, "partner")};

        for (const auto& c : extracted.value("commitments", json::array())) {
            MemoEntry m;
            m.text = c.is_string() ? c.get<std::string>() : c.value("text", "");
            if (m.text.empty()) continue;
            m.created = now;
            m.location = c.is_object() ? c.value("location", location) : location;
            if (c.is_object() && c.contains("time") && c["time"].is_string()) {
                const auto offset = c.value("day_offset", 0);
                m.due = clock.parse(c["time"].get<std::string>(), clock.day_of(now) + std::max(0, offset));
            }
            const bool duplicate = std::any_of(rec.commitments.begin(), rec.commitments.end(), [&](const MemoEntry& x) {
                return x.text == m.text && x.due == m.due;
            });
            if (!duplicate) rec.commitments.push_back(std::move(m));
        }

        // Each side rates how the conversation left them feeling.
        for (std::size_t i = 0; i < 2; ++i) {
            try {
                TemplateVars vars{{"persona", side[i]->profile.describe()},
                                  {"name", side[i]->profile.name},
                                  {"transcript", history}};
                const auto resp = gateway.generate(
                    templates.request("converse_emotion", vars, ExpectedFormat::json_schema("emotion_rating")));
                EmotionEvent ev;
                ev.kind = emotion_from_name(resp.parsed->at("emotion").get<std::string>());
                ev.base_intensity = std::clamp(resp.parsed->at("intensity").get<double>(), 0.0, 1.0);
                ev.timestamp = now;
                rec.emotions[i] = ev;
            } catch (const BackendUnavailableError& err) {
                rec.backend_unavailable = true;
                rec.error = err.what();
            } catch (const std::exception&) {
                // unusable rating: no emotion for this side
            }
        }
    }

    for (std::size_t i = 0; i < 2; ++i) {
        Participant& self = *side[i];
        Participant& other = *side[1 - i];
        self.memory.update_relationship(other.profile.id, rec.intimacy_delta[i], rec.impressions[i],
                                        Interaction{now, location, rec.summary});
        for (auto m : rec.commitments) {
            m.commitment_with = other.profile.id;
            self.memo.push_back(std::move(m));
        }
        if (rec.emotions[i]) self.affect.feel(*rec.emotions[i], self.profile.big_five, affect);
        FullMemoryRecord mem;
        mem.tick = now;
        mem.location = location;
        mem.content = "Talked with " + other.profile.name + ": " + rec.summary;
        mem.importance = settings.memory_importance;
        mem.emotional_response = self.affect.emotions();
        self.memory.record_event(std::move(mem));
    }
    return rec;
}

}  // namespace psya
