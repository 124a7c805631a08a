#include "psya/cognition.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace psya {

std::string_view to_string(ThinkingMode m) { return m == ThinkingMode::CEN ? "CEN" : "DMN"; }

bool SnConfig::is_relaxed(std::string_view context) const {
    for (const auto& token : tokenize(context))
        for (const auto& tag : relaxed_contexts)
        {
            if (tag.empty()) continue;
            if (token.starts_with(tag)) return true;
            // "commute" -> "commuting"
            if (tag.size() > 2 && tag.back() == 'e' && token.starts_with(tag.substr(0, tag.size() - 1) + "ing"))
                return true;
        }
    return false;
}

ThinkingMode sn_select_mode(std::string_view context, const SnConfig& cfg, Rng& rng) {
    if (cfg.is_relaxed(context)) return ThinkingMode::DMN;
    return rng.bernoulli(cfg.disturbance_prob) ? ThinkingMode::DMN : ThinkingMode::CEN;
}

double NeedCurve::operator()(double x) const {
    x = std::clamp(x, 0.0, 1.0);
    const double v = x <= 0.5 ? 1.0 - std::exp(alpha * (beta - x)) : std::exp(gamma * (x - delta));
    return std::clamp(v, 0.0, 1.0);
}

Priorities compute_priorities(const ScheduleEntry* entry, const NeedsState& needs, const EmotionVector& emotions,
                              const PriorityParams& params, Tick now) {
    Priorities p;
    if (entry) {
        const double remaining = static_cast<double>(entry->end - now);
        const double urgency = std::clamp(1.0 - remaining / params.day_length_ticks, 0.0, 1.0);
        p.task = std::clamp(params.task_weight * entry->importance + (1.0 - params.task_weight) * urgency, 0.0, 1.0);
    }
    p.min_need = needs.minimal();
    p.min_need_level = needs[p.min_need];
    p.need = params.need_curve(p.min_need_level);

    p.max_negative = kNegativeEmotions.front();
    for (Emotion e : kNegativeEmotions)
        if (emotions[e] > emotions[p.max_negative]) p.max_negative = e;
    p.max_negative_level = emotions[p.max_negative];
    p.emotion = params.emotion_curve(1.0 - p.max_negative_level);
    return p;
}

std::string_view to_string(ActionSource s) {
    switch (s) {
        case ActionSource::Schedule: return "schedule";
        case ActionSource::Need: return "need";
        case ActionSource::Emotion: return "emotion";
    }
    return "schedule";
}

ActionChoice decide(const Priorities& pr, const ScheduleEntry* entry, const PriorityParams& params) {
    ActionChoice c;
    const double top = std::max({pr.task, pr.need, pr.emotion});
    if (top > params.threshold) {
        if (pr.need == top) {
            c.source = ActionSource::Need;
            c.need = pr.min_need;
            c.level = pr.min_need_level;
            return c;
        }
        if (pr.emotion == top) {
            c.source = ActionSource::Emotion;
            c.emotion = pr.max_negative;
            c.level = pr.max_negative_level;
            return c;
        }
    }
    c.source = ActionSource::Schedule;
    if (entry) {
        c.activity = entry->activity;
        c.location = entry->location;
    } else {
        c.activity = "idle";
    }
    return c;
}

std::string mood_text(const MoodState& mood) {
    std::ostringstream os;
    std::string name(to_string(mood.octant));
    std::transform(name.begin(), name.end(), name.begin(), [](unsigned char ch) { return std::tolower(ch); });
    os.precision(2);
    os << std::fixed << name << " (intensity " << mood.intensity << ")";
    return os.str();
}

namespace {

std::string fmt2(double v) {
    std::ostringstream os;
    os.precision(2);
    os << std::fixed << v;
    return os.str();
}

std::string recent_lines(const MemoryStore& memory, std::size_t n, const Clock& clock) {
    const auto& full = memory.full();
    std::string out;
    const std::size_t begin = full.size() > n ? full.size() - n : 0;
    for (std::size_t i = begin; i < full.size(); ++i)
        out += "- [" + clock.format(full[i].tick) + "] " + full[i].content + "\n";
    if (out.empty()) out = "- nothing yet\n";
    return out;
}

}  // namespace

void choose_activity(ActionChoice& choice, const MindContext& ctx, const ScheduleEntry* entry,
                     std::string_view inspiration) {
    if (choice.source == ActionSource::Schedule) return;
    std::string source;
    if (choice.source == ActionSource::Need) {
        const Need n = *choice.need;
        source = "driven by the need: " + std::string(to_string(n)) + " (level " + fmt2(choice.level) + ")";
    } else {
        source = "driven by the emotion: " + std::string(to_string(*choice.emotion)) + " (intensity " +
                 fmt2(choice.level) + ")";
    }
    TemplateVars vars{{"persona", ctx.profile.describe()},
                      {"time", ctx.clock.format(ctx.now)},
                      {"name", ctx.profile.name},
                      {"location", ctx.location},
                      {"scheduled", entry ? entry->activity : std::string("nothing in particular")},
                      {"mood", mood_text(ctx.affect.mood())},
                      {"source", source},
                      {"inspiration", inspiration.empty() ? std::string{}
                                                          : "Something on their mind: " + std::string(inspiration)}};
    const auto resp = ctx.gateway.generate(ctx.templates.request("decide_activity", vars, ExpectedFormat::freetext()));
    choice.activity = resp.text;
}

std::string resolve_location(std::string_view name, const AgentProfile& profile,
                             const std::vector<std::string>& locations) {
    std::string lower(name);
    std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char ch) { return std::tolower(ch); });
    if (lower == "home" || lower == "my home") return profile.home;
    if (lower == "workplace" || lower == "work") return profile.workplace.empty() ? profile.home : profile.workplace;
    for (const auto& l : locations) {
        std::string ll = l;
        std::transform(ll.begin(), ll.end(), ll.begin(), [](unsigned char ch) { return std::tolower(ch); });
        if (ll == lower) return l;
    }
    if (lower == "café") return resolve_location("cafe", profile, locations);
    return profile.home;
}

namespace {

// Cuts [s, e) out of the schedule, keeping whatever lies outside it.
void carve(std::vector<ScheduleEntry>& schedule, Tick s, Tick e) {
    std::vector<ScheduleEntry> out;
    for (const auto& en : schedule) {
        if (!en.overlaps(s, e)) {
            out.push_back(en);
            continue;
        }
        if (en.start < s) {
            auto left = en;
            left.end = s;
            out.push_back(left);
        }
        if (en.end > e) {
            auto right = en;
            right.start = e;
            out.push_back(right);
        }
    }
    schedule = std::move(out);
}

void fill_gaps(std::vector<ScheduleEntry>& schedule, Tick from, Tick until, const std::string& home) {
    std::sort(schedule.begin(), schedule.end(), [](const auto& a, const auto& b) { return a.start < b.start; });
    std::vector<ScheduleEntry> out;
    Tick cursor = from;
    std::string where = home;
    for (const auto& e : schedule) {
        if (e.start > cursor) out.push_back({cursor, e.start, "idle", where, 0.1});
        out.push_back(e);
        cursor = std::max(cursor, e.end);
        where = e.location;
    }
    if (cursor < until) out.push_back({cursor, until, "idle", where, 0.1});
    schedule = std::move(out);
}

}  // namespace

PlanResult plan_day(const MindContext& ctx, const PlanInput& in) {
    PlanResult result;
    const Tick day_begin = ctx.clock.day_start(in.day);
    const Tick day_end = ctx.clock.day_start(in.day + 1);
    const Tick from = std::clamp(in.from, day_begin, day_end);

    std::vector<ScheduleEntry> kept;
    for (const auto& e : in.previous) {
        if (e.start >= from || e.end <= day_begin) continue;
        auto k = e;
        k.end = std::min(k.end, from);
        if (k.end > k.start) kept.push_back(k);
    }

    std::string memo_text;
    for (const auto& m : in.memo) {
        if (!memo_text.empty()) memo_text += "; ";
        memo_text += m.text;
        if (m.due) memo_text += " (at " + ctx.clock.format(*m.due) + ")";
    }
    if (memo_text.empty()) memo_text = "nothing";
    std::string places;
    for (const auto& l : in.locations) places += (places.empty() ? "" : ", ") + l;

    std::vector<ScheduleEntry> fresh;
    try {
        TemplateVars vars{{"persona", ctx.profile.describe()},
                          {"date", "day " + std::to_string(in.day + 1)},
                          {"name", ctx.profile.name},
                          {"from_time", ctx.clock.format(from)},
                          {"window_end", ctx.clock.format_end(day_end)},
                          {"mood", mood_text(ctx.affect.mood())},
                          {"locations", places},
                          {"memo", memo_text},
                          {"recent", recent_lines(ctx.memory, 5, ctx.clock)}};
        const auto resp = ctx.gateway.generate(
            ctx.templates.request("plan_day", vars, ExpectedFormat::json_schema("day_plan")));
        for (const auto& j : resp.parsed->at("entries")) {
            const auto s = ctx.clock.parse(j.value("start", ""), in.day);
            auto e = ctx.clock.parse(j.value("end", ""), in.day);
            if (!s || !e) continue;
            // "24:00" parses to the last tick of the window; the entry runs to its end.
            // Midnight ("24:00", "00:00", "12:00 AM") clamps to the last tick; the entry runs to the end.
            if (*e <= *s || j.value("end", "") == "24:00") e = day_end;
            ScheduleEntry en{std::max(*s, from), std::min(*e, day_end), j.value("activity", "idle"),
                             resolve_location(j.value("location", "home"), ctx.profile, in.locations),
                             std::clamp(j.value("importance", 0.5), 0.0, 1.0)};
            if (en.end > en.start) {
                carve(fresh, en.start, en.end);
                fresh.push_back(en);
            }
        }
    } catch (const BackendError& err) {
        result.fallback = true;
        result.error = err.what();
        fresh.clear();
        // Mid-day: keep what was planned for today. At day start: yesterday's plan, shifted.
        const bool today = std::any_of(in.previous.begin(), in.previous.end(),
                                       [&](const ScheduleEntry& e) { return e.end > from && e.start < day_end; });
        const Tick shift = today ? 0 : day_begin - ctx.clock.day_start(in.day - 1);
        for (auto e : in.previous) {
            if (!today && e.start >= day_begin) continue;
            e.start += shift;
            e.end += shift;
            e.start = std::max(e.start, from);
            if (e.end > e.start && e.start < day_end) fresh.push_back(e);
        }
    }

    for (const auto& m : in.memo) {
        if (!m.due || *m.due < from || *m.due >= day_end) continue;
        const Tick s = *m.due;
        const Tick e = std::min<Tick>(s + 4, day_end);
        carve(fresh, s, e);
        fresh.push_back({s, e, m.text, m.location.empty() ? ctx.profile.home : m.location, 0.9});
    }
    fill_gaps(fresh, from, day_end, kept.empty() ? ctx.profile.home : kept.back().location);

    result.schedule = std::move(kept);
    result.schedule.insert(result.schedule.end(), fresh.begin(), fresh.end());
    return result;
}

ReflectResult reflect(const MindContext& ctx, Period period, const SummaryThresholds& thresholds) {
    ReflectResult result;
    const auto records = ctx.memory.in_period(period);
    if (records.empty()) return result;

    SummarizedMemoryRecord insight;
    try {
        std::string lines;
        for (const auto& r : records) lines += "- [" + ctx.clock.format(r.tick) + "] " + r.content + "\n";
        TemplateVars vars{{"persona", ctx.profile.describe()},
                          {"name", ctx.profile.name},
                          {"period", ctx.clock.format(period.start) + " and " + ctx.clock.format(period.end)},
                          {"records", lines}};
        const auto resp =
            ctx.gateway.generate(ctx.templates.request("reflect", vars, ExpectedFormat::json_schema("reflection")));
        const auto& j = *resp.parsed;
        insight.insight = j.at("insight").is_string() ? j["insight"].get<std::string>() : j["insight"].dump();
        insight.importance = j.at("importance").is_number() ? std::clamp(j["importance"].get<double>(), 0.0, 1.0) : 0.5;
    } catch (const BackendError& err) {
        result.deferred = true;
        result.error = err.what();
        return result;
    }
    insight.period_start = period.start;
    insight.period_end = period.end;
    for (const auto& r : records) insight.provenance.push_back(r.id);

    result.summary = ctx.memory.summarize_tier(period, ctx.gateway, ctx.templates, ctx.profile.describe(),
                                               ctx.profile.name, ctx.clock, thresholds);
    if (result.summary.deferred) {
        // Keep the tier and the conclusion together: nothing is written.
        result.deferred = true;
        result.error = result.summary.error;
        return result;
    }
    result.insight = ctx.memory.add_summary(std::move(insight));
    return result;
}

std::string_view to_string(DmnFunction f) {
    switch (f) {
        case DmnFunction::ScenarioSimulation: return "scenario_simulation";
        case DmnFunction::SelfSocialCognition: return "self_social_cognition";
        case DmnFunction::MindWandering: return "mind_wandering";
    }
    return "mind_wandering";
}

std::string_view describe(DmnFunction f) {
    switch (f) {
        case DmnFunction::ScenarioSimulation:
            return "recall a past event or imagine an upcoming one and how it could play out differently";
        case DmnFunction::SelfSocialCognition:
            return "reflect on my own personality and behavior and on what other people think and feel";
        case DmnFunction::MindWandering:
            return "let thoughts drift freely from one idea to another without a goal";
    }
    return "";
}

std::string_view to_string(DmnStrategy s) {
    switch (s) {
        case DmnStrategy::Cyclic: return "cyclic";
        case DmnStrategy::Similarity: return "similarity";
        case DmnStrategy::Priority: return "priority";
    }
    return "cyclic";
}

DmnStrategy dmn_strategy_from_name(std::string_view name) {
    if (name == "cyclic") return DmnStrategy::Cyclic;
    if (name == "similarity") return DmnStrategy::Similarity;
    if (name == "priority") return DmnStrategy::Priority;
    throw ConfigurationError("unknown DMN strategy: " + std::string(name));
}

namespace {

std::optional<DmnFunction> next_cyclic(DmnSelector& sel) {
    for (std::size_t step = 0; step < 3; ++step) {
        const std::size_t i = (sel.cursor + step) % 3;
        if (sel.enabled[i]) {
            sel.cursor = (i + 1) % 3;
            return kAllDmnFunctions[i];
        }
    }
    return std::nullopt;
}

std::optional<DmnFunction> argmax_enabled(const DmnSelector& sel, const std::array<double, 3>& score) {
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < 3; ++i)
        if (sel.enabled[i] && (!best || score[i] > score[*best])) best = i;
    if (!best) return std::nullopt;
    return kAllDmnFunctions[*best];
}

}  // namespace

std::optional<DmnFunction> dmn_select(DmnSelector& sel, std::string_view memory_digest, std::string_view goals,
                                      const MindContext* ctx) {
    if (!sel.any_enabled()) return std::nullopt;
    switch (sel.strategy) {
        case DmnStrategy::Cyclic: return next_cyclic(sel);
        case DmnStrategy::Similarity: {
            std::array<double, 3> score{};
            try {
                const auto m = ctx ? ctx->gateway.embed(memory_digest) : hashed_embedding(memory_digest);
                for (std::size_t i = 0; i < 3; ++i) {
                    const auto f = ctx ? ctx->gateway.embed(describe(kAllDmnFunctions[i]))
                                       : hashed_embedding(describe(kAllDmnFunctions[i]));
                    score[i] = cosine_similarity(m, f);
                }
            } catch (const BackendError&) {
                for (std::size_t i = 0; i < 3; ++i)
                    score[i] = token_overlap(memory_digest, describe(kAllDmnFunctions[i]));
            }
            return argmax_enabled(sel, score);
        }
        case DmnStrategy::Priority: {
            if (!ctx) return next_cyclic(sel);
            try {
                TemplateVars vars{{"persona", ctx->profile.describe()},
                                  {"name", ctx->profile.name},
                                  {"goals", std::string(goals)},
                                  {"function_1", std::string(describe(DmnFunction::ScenarioSimulation))},
                                  {"function_2", std::string(describe(DmnFunction::SelfSocialCognition))},
                                  {"function_3", std::string(describe(DmnFunction::MindWandering))}};
                const auto resp =
                    ctx->gateway.generate(ctx->templates.request("dmn_priority", vars, ExpectedFormat::scores(3)));
                std::array<double, 3> score{};
                for (std::size_t i = 0; i < 3; ++i) score[i] = resp.parsed->at(i).get<double>();
                return argmax_enabled(sel, score);
            } catch (const BackendError&) {
                return next_cyclic(sel);
            }
        }
    }
    return std::nullopt;
}

namespace {

std::string adjectives_for(const PersonalityProfile& p) {
    static const std::array<std::pair<const char*, const char*>, 5> kPairs = {{
        {"outgoing", "reserved"},
        {"kind", "critical"},
        {"anxious", "calm"},
        {"curious", "conventional"},
        {"organized", "spontaneous"},
    }};
    (void)p;
    std::string out;
    for (std::size_t i = 0; i < 5; ++i) {
        out += (i ? ", " : "");
        out += kPairs[i].first;
        out += ", ";
        out += kPairs[i].second;
    }
    return out;
}

std::optional<EmotionEvent> event_from(const json& j, Tick now) {
    if (!j.contains("emotion") || !j["emotion"].is_string()) return std::nullopt;
    try {
        EmotionEvent ev;
        ev.kind = emotion_from_name(j["emotion"].get<std::string>());
        ev.base_intensity = std::clamp(j.value("intensity", 0.5), 0.0, 1.0);
        ev.timestamp = now;
        return ev;
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

std::string as_text(const json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); }

}  // namespace

DmnArtifact run_dmn_function(DmnFunction kind, const MindContext& ctx, const std::vector<ScheduleEntry>& schedule,
                             Rng& rng) {
    DmnArtifact art;
    art.kind = kind;
    const std::string persona = ctx.profile.describe();
    try {
        switch (kind) {
            case DmnFunction::ScenarioSimulation: {
                const ScheduleEntry* upcoming = nullptr;
                for (const auto& e : schedule)
                    if (e.start > ctx.now && (!upcoming || e.importance > upcoming->importance)) upcoming = &e;
                const FullMemoryRecord* memorable = nullptr;
                for (const auto& r : ctx.memory.full())
                    if (!r.imagined && (!memorable || r.importance > memorable->importance)) memorable = &r;

                std::string focus_kind, tense;
                if (upcoming && (!memorable || upcoming->importance >= memorable->importance)) {
                    focus_kind = "an upcoming event";
                    tense = "might";
                    art.focus = upcoming->activity + " at " + ctx.clock.format(upcoming->start);
                } else if (memorable) {
                    focus_kind = "something that happened";
                    tense = "could have";
                    art.focus = memorable->content;
                } else {
                    focus_kind = "the days ahead";
                    tense = "might";
                    art.focus = "what tomorrow could bring";
                }
                TemplateVars vars{{"persona", persona},          {"mood", mood_text(ctx.affect.mood())},
                                  {"name", ctx.profile.name},    {"focus_kind", focus_kind},
                                  {"focus", art.focus},          {"tense", tense}};
                const auto resp = ctx.gateway.generate(
                    ctx.templates.request("scenario_simulation", vars, ExpectedFormat::json_schema("scenario")));
                art.text = as_text(resp.parsed->at("scenario"));
                if (auto ev = event_from(*resp.parsed, ctx.now)) art.events.push_back(*ev);
                FullMemoryRecord rec;
                rec.tick = ctx.now;
                rec.location = ctx.location;
                rec.content = "Imagined (" + art.focus + "): " + art.text;
                rec.importance = 0.4;
                rec.emotional_response = ctx.affect.emotions();
                rec.imagined = true;
                art.records.push_back(ctx.memory.record_event(rec));
                break;
            }
            case DmnFunction::SelfSocialCognition: {
                const RelationalMemoryRecord* other = nullptr;
                for (const auto& [id, rel] : ctx.memory.relations()) {
                    if (rel.interactions.empty()) continue;
                    if (!other || rel.interactions.back().tick > other->interactions.back().tick) other = &rel;
                }
                std::string other_block;
                if (other) {
                    other_block = "Last time with " + other->other + " (" + ctx.clock.format(other->interactions.back().tick) +
                                  "): " + other->interactions.back().summary + "\nWhat might " + other->other +
                                  " be thinking and feeling, and what is " + ctx.profile.name + "'s impression of them now?";
                }
                TemplateVars vars{{"persona", persona},
                                  {"name", ctx.profile.name},
                                  {"recent", recent_lines(ctx.memory, 5, ctx.clock)},
                                  {"adjectives", adjectives_for(ctx.profile.big_five)},
                                  {"other_block", other_block}};
                const auto resp = ctx.gateway.generate(ctx.templates.request(
                    "self_social_cognition", vars, ExpectedFormat::json_schema("self_reflection")));
                art.text = as_text(resp.parsed->at("self_view"));
                if (other && resp.parsed->contains("impression")) {
                    const auto impression = as_text((*resp.parsed)["impression"]);
                    if (!impression.empty()) {
                        ctx.memory.set_impression(other->other, impression);
                        art.impression_of = other->other;
                    }
                }
                FullMemoryRecord rec;
                rec.tick = ctx.now;
                rec.location = ctx.location;
                rec.content = "Thought about myself: " + art.text;
                rec.importance = 0.3;
                rec.emotional_response = ctx.affect.emotions();
                art.records.push_back(ctx.memory.record_event(rec));
                break;
            }
            case DmnFunction::MindWandering: {
                const auto& full = ctx.memory.full();
                std::string seed = "the view from where " + ctx.profile.name + " is right now";
                if (!full.empty()) {
                    const auto pool = ctx.memory.retrieve(ctx.location, 5, ctx.now);
                    seed = pool[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(pool.size()) - 1))]
                               .content;
                }
                art.focus = seed;
                TemplateVars vars{{"persona", persona}, {"name", ctx.profile.name}, {"seed_memory", seed}};
                const auto resp =
                    ctx.gateway.generate(ctx.templates.request("mind_wandering", vars, ExpectedFormat::freetext()));
                art.text = resp.text;
                FullMemoryRecord rec;
                rec.tick = ctx.now;
                rec.location = ctx.location;
                rec.content = "Mind wandered: " + art.text;
                rec.importance = 0.2;
                rec.emotional_response = ctx.affect.emotions();
                rec.inspiration = true;
                art.records.push_back(ctx.memory.record_event(rec));
                break;
            }
        }
        art.ok = true;
    } catch (const BackendError& err) {
        art.ok = false;
        art.error = err.what();
        art.events.clear();
    }
    return art;
}

}  // namespace psya
