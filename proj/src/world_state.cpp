// Configuration files and checkpoints for the town simulation.

#include "psya/world.hpp"

#include <fstream>

namespace psya {

namespace {

json need_map(const std::array<double, 5>& v) {
    json j = json::object();
    for (Need n : kAllNeeds) j[std::string(to_string(n))] = v[static_cast<std::size_t>(n)];
    return j;
}

std::string horizon_name(GoalHorizon h) { return h == GoalHorizon::Long ? "long" : "short"; }

json curve_json(const NeedCurve& c) {
    return {{"alpha", c.alpha}, {"beta", c.beta}, {"gamma", c.gamma}, {"delta", c.delta}};
}

NeedCurve curve_from(const json& j, NeedCurve c) {
    c.alpha = j.value("alpha", c.alpha);
    c.beta = j.value("beta", c.beta);
    c.gamma = j.value("gamma", c.gamma);
    c.delta = j.value("delta", c.delta);
    return c;
}

json schedule_json(const std::vector<ScheduleEntry>& s) {
    json out = json::array();
    for (const auto& e : s)
        out.push_back({{"start", e.start},
                       {"end", e.end},
                       {"activity", e.activity},
                       {"location", e.location},
                       {"importance", e.importance}});
    return out;
}

std::vector<ScheduleEntry> schedule_from(const json& j) {
    std::vector<ScheduleEntry> out;
    for (const auto& e : j)
        out.push_back({e.at("start").get<Tick>(), e.at("end").get<Tick>(), e.value("activity", ""),
                       e.value("location", ""), e.value("importance", 0.5)});
    return out;
}

json memo_json(const std::vector<MemoEntry>& memo) {
    json out = json::array();
    for (const auto& m : memo) {
        json j{{"text", m.text}, {"created", m.created}, {"location", m.location}};
        if (m.due) j["due"] = *m.due;
        if (m.commitment_with) j["with"] = *m.commitment_with;
        out.push_back(j);
    }
    return out;
}

std::vector<MemoEntry> memo_from(const json& j) {
    std::vector<MemoEntry> out;
    for (const auto& m : j) {
        MemoEntry e;
        e.text = m.value("text", "");
        e.created = m.value("created", Tick{0});
        e.location = m.value("location", "");
        if (m.contains("due")) e.due = m["due"].get<Tick>();
        if (m.contains("with")) e.commitment_with = m["with"].get<std::string>();
        out.push_back(std::move(e));
    }
    return out;
}

json pad_json(PadVector v) { return json::array({v.p, v.a, v.d}); }
PadVector pad_from(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()}; }

ActionSource source_from(const std::string& s) {
    if (s == "need") return ActionSource::Need;
    if (s == "emotion") return ActionSource::Emotion;
    return ActionSource::Schedule;
}

}  // namespace

json to_json(const AgentProfile& p) {
    json goals = json::array();
    for (const auto& g : p.goals) goals.push_back({{"text", g.text}, {"horizon", horizon_name(g.horizon)}});
    return {{"id", p.id},
            {"name", p.name},
            {"gender", p.gender},
            {"age", p.age},
            {"occupation", p.occupation},
            {"big_five",
             {{"extraversion", p.big_five.extraversion},
              {"agreeableness", p.big_five.agreeableness},
              {"neuroticism", p.big_five.neuroticism},
              {"openness", p.big_five.openness},
              {"conscientiousness", p.big_five.conscientiousness}}},
            {"trait_descriptions", p.trait_descriptions},
            {"goals", goals},
            {"home", p.home},
            {"workplace", p.workplace},
            {"appearance", p.appearance},
            {"beliefs", p.beliefs}};
}

AgentProfile agent_profile_from_json(const json& j) {
    AgentProfile p;
    p.id = j.at("id").get<std::string>();
    p.name = j.value("name", p.id);
    p.gender = j.value("gender", "");
    p.age = j.value("age", 30);
    p.occupation = j.value("occupation", "");
    if (j.contains("big_five")) {
        const auto& b = j["big_five"];
        p.big_five.extraversion = b.value("extraversion", 0.5);
        p.big_five.agreeableness = b.value("agreeableness", 0.5);
        p.big_five.neuroticism = b.value("neuroticism", 0.5);
        p.big_five.openness = b.value("openness", 0.5);
        p.big_five.conscientiousness = b.value("conscientiousness", 0.5);
    }
    const auto traits = p.big_five.as_array();
    for (std::size_t i = 0; i < 5; ++i) p.trait_descriptions[i] = describe_trait(i, traits[i]);
    if (j.contains("trait_descriptions"))
        for (std::size_t i = 0; i < 5 && i < j["trait_descriptions"].size(); ++i)
            p.trait_descriptions[i] = j["trait_descriptions"][i].get<std::string>();
    for (const auto& g : j.value("goals", json::array())) {
        if (g.is_string())
            p.goals.push_back({g.get<std::string>(), GoalHorizon::Short});
        else
            p.goals.push_back({g.value("text", ""), g.value("horizon", "short") == "long" ? GoalHorizon::Long
                                                                                          : GoalHorizon::Short});
    }
    p.home = j.value("home", p.name + "'s home");
    p.workplace = j.value("workplace", "");
    p.appearance = j.value("appearance", "");
    p.beliefs = j.value("beliefs", std::vector<std::string>{});
    return p;
}

json WorldConfig::to_json() const {
    json agents_j = json::array();
    for (const auto& a : agents) agents_j.push_back(psya::to_json(a));
    json rel = json::array();
    for (const auto& r : relationships) rel.push_back({{"a", r.a}, {"b", r.b}, {"kind", r.kind}, {"intimacy", r.intimacy}});
    json functions = json::array();
    for (std::size_t i = 0; i < 3; ++i)
        if (dmn_enabled[i]) functions.push_back(std::string(psya::to_string(kAllDmnFunctions[i])));
    return {{"seed", seed},
            {"clock",
             {{"tick_minutes", clock.tick_minutes},
              {"day_start_minute", clock.day_start_minute},
              {"day_end_minute", clock.day_end_minute}}},
            {"public_locations", public_locations},
            {"hub", hub},
            {"agents", agents_j},
            {"relationships", rel},
            {"affect",
             {{"pull_rate", affect.pull_rate},
              {"push_rate", affect.push_rate},
              {"emotion_half_life", affect.emotion_half_life},
              {"mood_half_life", affect.mood_half_life},
              {"mood_weight_base", affect.mood_weight_base},
              {"mood_weight_span", affect.mood_weight_span}}},
            {"layered_affect", layered_affect},
            {"priority",
             {{"task_weight", priority.task_weight},
              {"threshold", priority.threshold},
              {"day_length_ticks", priority.day_length_ticks},
              {"need_curve", curve_json(priority.need_curve)},
              {"emotion_curve", curve_json(priority.emotion_curve)}}},
            {"sn", {{"relaxed_contexts", sn.relaxed_contexts}, {"disturbance_prob", sn.disturbance_prob}}},
            {"dmn", {{"strategy", std::string(psya::to_string(dmn_strategy))}, {"functions", functions}}},
            {"retrieval",
             {{"relevance", retrieval.relevance},
              {"recency", retrieval.recency},
              {"importance", retrieval.importance},
              {"recency_half_life", retrieval.recency_half_life}}},
            {"summary_thresholds", {{"importance", thresholds.importance}, {"emotion", thresholds.emotion}}},
            {"conversation",
             {{"max_turns", conversation.max_turns},
              {"max_intimacy_delta", conversation.max_intimacy_delta},
              {"cooldown", conversation_cooldown}}},
            {"trigger",
             {{"base", trigger.base}, {"intimacy_weight", trigger.intimacy_weight}, {"social_weight", trigger.social_weight}}},
            {"needs", {{"drift_per_hour", need_map(needs.drift_per_hour)}}}};
}

WorldConfig WorldConfig::from_json(const json& j) {
    try {
        if (!j.is_object()) throw ConfigurationError("run configuration must be a JSON object");
        const std::uint64_t seed = j.value("seed", std::uint64_t{7});
        WorldConfig c;
        if (j.contains("agents")) {
            c.seed = seed;
            for (const auto& a : j["agents"]) c.agents.push_back(agent_profile_from_json(a));
            for (const auto& r : j.value("relationships", json::array()))
                c.relationships.push_back({r.at("a").get<std::string>(), r.at("b").get<std::string>(),
                                           r.value("kind", "acquaintance"), r.value("intimacy", 0.5)});
        } else {
            const auto town = j.value("town", json::object());
            c = generate_town(seed, town.value("agents", 8), town.value("employed", 6));
        }
        if (j.contains("clock")) {
            const auto& k = j["clock"];
            c.clock.tick_minutes = k.value("tick_minutes", c.clock.tick_minutes);
            c.clock.day_start_minute = k.value("day_start_minute", c.clock.day_start_minute);
            c.clock.day_end_minute = k.value("day_end_minute", c.clock.day_end_minute);
        }
        c.priority.day_length_ticks = c.clock.ticks_per_day();
        c.public_locations = j.value("public_locations", c.public_locations);
        c.hub = j.value("hub", c.hub);
        if (j.contains("affect")) {
            const auto& a = j["affect"];
            c.affect.pull_rate = a.value("pull_rate", c.affect.pull_rate);
            c.affect.push_rate = a.value("push_rate", c.affect.push_rate);
            c.affect.emotion_half_life = a.value("emotion_half_life", c.affect.emotion_half_life);
            c.affect.mood_half_life = a.value("mood_half_life", c.affect.mood_half_life);
            c.affect.mood_weight_base = a.value("mood_weight_base", c.affect.mood_weight_base);
            c.affect.mood_weight_span = a.value("mood_weight_span", c.affect.mood_weight_span);
        }
        c.layered_affect = j.value("layered_affect", c.layered_affect);
        if (j.contains("priority")) {
            const auto& p = j["priority"];
            c.priority.task_weight = p.value("task_weight", c.priority.task_weight);
            c.priority.threshold = p.value("threshold", c.priority.threshold);
            c.priority.day_length_ticks = p.value("day_length_ticks", c.priority.day_length_ticks);
            if (p.contains("need_curve")) c.priority.need_curve = curve_from(p["need_curve"], c.priority.need_curve);
            if (p.contains("emotion_curve"))
                c.priority.emotion_curve = curve_from(p["emotion_curve"], c.priority.emotion_curve);
        }
        if (j.contains("sn")) {
            c.sn.relaxed_contexts = j["sn"].value("relaxed_contexts", c.sn.relaxed_contexts);
            c.sn.disturbance_prob = j["sn"].value("disturbance_prob", c.sn.disturbance_prob);
        }
        if (j.contains("dmn")) {
            const auto& d = j["dmn"];
            c.dmn_strategy = dmn_strategy_from_name(d.value("strategy", "cyclic"));
            if (d.contains("functions")) {
                c.dmn_enabled = {false, false, false};
                for (const auto& f : d["functions"]) {
                    bool found = false;
                    for (std::size_t i = 0; i < 3; ++i)
                        if (f.get<std::string>() == to_string(kAllDmnFunctions[i])) c.dmn_enabled[i] = found = true;
                    if (!found) throw ConfigurationError("unknown DMN function " + f.dump());
                }
            }
        }
        if (j.contains("retrieval")) {
            const auto& r = j["retrieval"];
            c.retrieval.relevance = r.value("relevance", c.retrieval.relevance);
            c.retrieval.recency = r.value("recency", c.retrieval.recency);
            c.retrieval.importance = r.value("importance", c.retrieval.importance);
            c.retrieval.recency_half_life = r.value("recency_half_life", c.retrieval.recency_half_life);
        }
        if (j.contains("summary_thresholds")) {
            c.thresholds.importance = j["summary_thresholds"].value("importance", c.thresholds.importance);
            c.thresholds.emotion = j["summary_thresholds"].value("emotion", c.thresholds.emotion);
        }
        if (j.contains("conversation")) {
            const auto& v = j["conversation"];
            c.conversation.max_turns = v.value("max_turns", c.conversation.max_turns);
            c.conversation.max_intimacy_delta = v.value("max_intimacy_delta", c.conversation.max_intimacy_delta);
            c.conversation_cooldown = v.value("cooldown", c.conversation_cooldown);
        }
        if (j.contains("trigger")) {
            const auto& t = j["trigger"];
            c.trigger.base = t.value("base", c.trigger.base);
            c.trigger.intimacy_weight = t.value("intimacy_weight", c.trigger.intimacy_weight);
            c.trigger.social_weight = t.value("social_weight", c.trigger.social_weight);
        }
        if (j.contains("needs") && j["needs"].contains("drift_per_hour")) {
            const auto& d = j["needs"]["drift_per_hour"];
            for (Need n : kAllNeeds)
                c.needs.drift_per_hour[static_cast<std::size_t>(n)] =
                    d.value(std::string(to_string(n)), c.needs.drift_per_hour[static_cast<std::size_t>(n)]);
        }
        c.validate();
        return c;
    } catch (const json::exception& e) {
        throw ConfigurationError(std::string("malformed run configuration: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw ConfigurationError(std::string("malformed run configuration: ") + e.what());
    }
}

// ---------------------------------------------------------------------------
// Checkpoints

void World::save_checkpoint(const std::filesystem::path& dir) const {
    std::filesystem::create_directories(dir / "memory");
    json agents = json::array();
    for (const auto& a : state_.agents) {
        json pending = json::array();
        for (const auto& w : a.affect.pending()) pending.push_back({{"point", pad_json(w.point)}, {"intensity", w.intensity}});
        agents.push_back({{"id", a.profile.id},
                          {"profile", psya::to_json(a.profile)},
                          {"emotions", psya::to_json(a.affect.emotions())},
                          {"mood", pad_json(a.affect.mood().position)},
                          {"default_mood", pad_json(a.affect.default_mood())},
                          {"layered", a.affect.layered()},
                          {"pending", pending},
                          {"needs", need_map(a.needs.values())},
                          {"memo", memo_json(a.memo)},
                          {"schedule", schedule_json(a.schedule)},
                          {"location", a.location},
                          {"activity", a.activity},
                          {"target", a.target},
                          {"source", std::string(to_string(a.source))},
                          {"driver", a.driver},
                          {"activity_since", a.activity_since},
                          {"planned_day", a.planned_day},
                          {"memo_planned", a.memo_planned},
                          {"dmn_cursor", a.dmn.cursor},
                          {"rng", a.rng.save_state()},
                          {"last_conversation", a.last_conversation},
                          {"mode", std::string(to_string(a.mode))},
                          {"plan_fallback", a.plan_fallback}});
        a.memory.save(dir / "memory", a.profile.id);
    }
    json root{{"now", state_.now}, {"rng", state_.rng.save_state()}, {"config", config_.to_json()}, {"agents", agents}};
    std::ofstream out(dir / "world.json", std::ios::trunc);
    out << root.dump(1) << "\n";
    if (!out) throw std::runtime_error("cannot write checkpoint to " + dir.string());
}

World World::resume(const std::filesystem::path& dir, Gateway& gateway, const TemplateLibrary& templates) {
    std::ifstream in(dir / "world.json");
    if (!in) throw ConfigurationError("no checkpoint in " + dir.string());
    json root;
    try {
        root = json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigurationError(std::string("corrupt checkpoint: ") + e.what());
    }
    WorldConfig config = WorldConfig::from_json(root.at("config"));
    std::sort(config.agents.begin(), config.agents.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
    State state;
    state.now = root.at("now").get<Tick>();
    state.rng.load_state(root.at("rng").get<std::string>());
    for (const auto& j : root.at("agents")) {
        AgentRuntime a;
        a.profile = agent_profile_from_json(j.at("profile"));
        std::vector<WeightedPad> pending;
        for (const auto& p : j.at("pending")) pending.push_back({pad_from(p.at("point")), p.at("intensity").get<double>()});
        a.affect.restore(emotion_vector_from_json(j.at("emotions")), MoodState::at(pad_from(j.at("mood"))),
                         pad_from(j.at("default_mood")), j.at("layered").get<bool>(), std::move(pending));
        for (Need n : kAllNeeds) a.needs[n] = j.at("needs").at(std::string(to_string(n))).get<double>();
        a.memory = MemoryStore::load(dir / "memory", a.profile.id);
        a.memo = memo_from(j.at("memo"));
        a.schedule = schedule_from(j.at("schedule"));
        a.location = j.at("location").get<std::string>();
        a.activity = j.at("activity").get<std::string>();
        a.target = j.at("target").get<std::string>();
        a.source = source_from(j.at("source").get<std::string>());
        a.driver = j.at("driver").get<std::string>();
        a.activity_since = j.at("activity_since").get<Tick>();
        a.planned_day = j.at("planned_day").get<std::int64_t>();
        a.memo_planned = j.at("memo_planned").get<std::size_t>();
        a.dmn.strategy = config.dmn_strategy;
        a.dmn.enabled = config.dmn_enabled;
        a.dmn.cursor = j.at("dmn_cursor").get<std::size_t>();
        a.rng.load_state(j.at("rng").get<std::string>());
        a.last_conversation = j.at("last_conversation").get<Tick>();
        a.mode = j.at("mode").get<std::string>() == "DMN" ? ThinkingMode::DMN : ThinkingMode::CEN;
        a.plan_fallback = j.at("plan_fallback").get<bool>();
        state.agents.push_back(std::move(a));
    }
    return World(std::move(config), gateway, templates, std::move(state));
}

}  // namespace psya
