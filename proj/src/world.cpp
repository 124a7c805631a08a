#include "psya/world.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <set>
#include <sstream>

namespace psya {

std::vector<ActivityEffect> NeedsDynamics::default_effects() {
    return {
        {"eating", {"eat", "meal", "lunch", "dinner", "breakfast", "snack", "food"}, Need::Fullness, 0.4, false},
        {"sleeping", {"sleep", "nap"}, Need::Energy, 0.1, true},
        {"socializing", {"chat", "talk", "friend", "meet", "social"}, Need::Social, 0.2, false},
        {"clinic", {"clinic", "doctor", "check"}, Need::Health, 0.3, false},
        {"leisure", {"play", "game", "read", "book", "walk", "music", "movie"}, Need::Fun, 0.1, true},
    };
}

std::vector<std::string> activity_tags(std::string_view activity, const NeedsDynamics& dyn) {
    std::vector<std::string> out;
    const auto tokens = tokenize(activity);
    for (const auto& effect : dyn.effects) {
        const bool hit = std::any_of(tokens.begin(), tokens.end(), [&](const std::string& t) {
            return std::any_of(effect.keywords.begin(), effect.keywords.end(),
                               [&](const std::string& k) { return t.starts_with(k); });
        });
        if (hit) out.push_back(effect.name);
    }
    return out;
}

NeedsState step_needs(const NeedsState& needs, std::string_view activity, double dt, const NeedsDynamics& dyn,
                      bool activity_started) {
    NeedsState out = needs;
    if (dt <= 0.0) return out;
    for (Need n : kAllNeeds) out[n] += dyn.drift_per_hour[static_cast<std::size_t>(n)] * dt;
    const auto tags = activity_tags(activity, dyn);
    for (const auto& effect : dyn.effects) {
        if (std::find(tags.begin(), tags.end(), effect.name) == tags.end()) continue;
        if (effect.per_hour)
            out[effect.need] += effect.amount * dt;
        else if (activity_started)
            out[effect.need] += effect.amount;
    }
    out.clamp();
    return out;
}

std::vector<std::string> WorldConfig::locations() const {
    auto out = public_locations;
    for (const auto& a : agents)
        if (std::find(out.begin(), out.end(), a.home) == out.end()) out.push_back(a.home);
    return out;
}

void WorldConfig::validate() const {
    if (!clock.divides_day()) throw ConfigurationError("tick length must divide the daily window");
    if (!affect.valid()) throw ConfigurationError("invalid affect parameters");
    if (priority.threshold < 0.0 || priority.threshold > 1.0) throw ConfigurationError("threshold must be in [0, 1]");
    if (sn.disturbance_prob < 0.0 || sn.disturbance_prob > 1.0)
        throw ConfigurationError("disturbance probability must be in [0, 1]");
    if (std::find(public_locations.begin(), public_locations.end(), hub) == public_locations.end())
        throw ConfigurationError("hub location '" + hub + "' is not a public location");
    std::set<AgentId> ids;
    for (const auto& a : agents) {
        if (a.id.empty()) throw ConfigurationError("agent without an id");
        if (!ids.insert(a.id).second) throw ConfigurationError("duplicate agent id " + a.id);
        if (a.home.empty()) throw ConfigurationError("agent " + a.id + " has no home");
        if (!a.big_five.valid()) throw ConfigurationError("agent " + a.id + " has traits outside [0, 1]");
        if (a.age < 0) throw ConfigurationError("agent " + a.id + " has a negative age");
    }
    for (const auto& r : relationships)
        if (!ids.count(r.a) || !ids.count(r.b) || r.a == r.b)
            throw ConfigurationError("relationship between unknown agents " + r.a + " and " + r.b);
}

namespace {

const std::array<const char*, 8> kFemaleNames = {"Alice", "Beatrice", "Clara", "Diana",
                                                 "Eva",   "Fiona",    "Grace", "Helen"};
const std::array<const char*, 8> kMaleNames = {"Arthur", "Ben",   "Carl",  "David",
                                               "Ethan",  "Frank", "George", "Henry"};

struct Job {
    const char* occupation;
    const char* workplace;
};
const std::array<Job, 6> kJobs = {{{"restaurant owner", "restaurant"},
                                   {"barista", "cafe"},
                                   {"librarian", "library"},
                                   {"doctor", "clinic"},
                                   {"shopkeeper", "store"},
                                   {"gardener", "park"}}};

}  // namespace

WorldConfig generate_town(std::uint64_t seed, int n_agents, int employed) {
    if (n_agents < 2 || employed < 0 || employed > n_agents)
        throw ConfigurationError("town needs at least two agents and at most as many jobs as agents");
    WorldConfig cfg;
    cfg.seed = seed;
    Rng rng = Rng(seed).fork(0x70e1);

    std::vector<std::string> genders;
    for (int i = 0; i < n_agents; ++i) genders.push_back(i % 2 == 0 ? "female" : "male");
    // Shuffle so the gender pattern is not tied to the job order.
    for (int i = n_agents - 1; i > 0; --i) std::swap(genders[i], genders[rng.uniform_int(0, i)]);

    std::size_t fi = 0, mi = 0;
    for (int i = 0; i < n_agents; ++i) {
        PersonaSpec spec;
        spec.gender = genders[i];
        if (i < employed) {
            spec.occupation = kJobs[i % kJobs.size()].occupation;
            spec.workplace = kJobs[i % kJobs.size()].workplace;
        } else {
            spec.occupation = "newcomer to town, currently unemployed";
        }
        auto p = generate_persona(spec, rng);
        p.name = spec.gender == "female" ? kFemaleNames[fi++ % kFemaleNames.size()]
                                         : kMaleNames[mi++ % kMaleNames.size()];
        std::string id = p.name;
        std::transform(id.begin(), id.end(), id.begin(), [](unsigned char ch) { return std::tolower(ch); });
        p.id = id;
        p.home = p.name + "'s home";
        if (i >= employed) p.workplace = "library";  // newcomers spend working hours looking for a job
        cfg.agents.push_back(std::move(p));
    }

    // Familial, cooperative, competitive and antagonistic ties among the
    // residents; newcomers start as strangers to everyone.
    const std::array<std::pair<const char*, double>, 4> kinds = {
        {{"familial", 0.8}, {"cooperative", 0.6}, {"competitive", 0.4}, {"antagonistic", 0.2}}};
    const int residents = employed;
    for (int i = 0; i + 1 < residents; i += 2) {
        const auto& [kind, intimacy] = kinds[(i / 2) % kinds.size()];
        cfg.relationships.push_back({cfg.agents[i].id, cfg.agents[i + 1].id, kind, intimacy});
    }
    if (residents >= 4)
        cfg.relationships.push_back({cfg.agents[1].id, cfg.agents[residents - 1].id, "antagonistic", 0.2});
    return cfg;
}

// ---------------------------------------------------------------------------

World::World(WorldConfig config, Gateway& gateway, const TemplateLibrary& templates)
    : config_(std::move(config)), gateway_(gateway), templates_(templates) {
    config_.validate();
    std::sort(config_.agents.begin(), config_.agents.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
    state_.rng = Rng(config_.seed).fork(0x504149);
    for (std::size_t i = 0; i < config_.agents.size(); ++i) {
        AgentRuntime a;
        a.profile = config_.agents[i];
        a.affect = AffectState(a.profile.big_five, config_.layered_affect);
        a.location = a.profile.home;
        a.target = a.profile.home;
        a.dmn.strategy = config_.dmn_strategy;
        a.dmn.enabled = config_.dmn_enabled;
        a.rng = Rng(config_.seed).fork(1000 + i);
        state_.agents.push_back(std::move(a));
    }
    for (const auto& r : config_.relationships) {
        for (auto& a : state_.agents) {
            if (a.profile.id == r.a) a.memory.seed_relationship(r.b, r.kind, r.intimacy);
            if (a.profile.id == r.b) a.memory.seed_relationship(r.a, r.kind, r.intimacy);
        }
    }
    for (const auto& a : state_.agents) emit(0, a, "init", {{"profile", psya::to_json(a.profile)}});
}

World::World(WorldConfig config, Gateway& gateway, const TemplateLibrary& templates, State state)
    : config_(std::move(config)), gateway_(gateway), templates_(templates), state_(std::move(state)) {}

const AgentRuntime* World::agent(const AgentId& id) const {
    for (const auto& a : state_.agents)
        if (a.profile.id == id) return &a;
    return nullptr;
}

void World::run(Tick ticks) {
    for (Tick i = 0; i < ticks; ++i) step();
}

void World::step() {
    State before = state_;
    const auto log_size = log_.size();
    const auto series_size = series_.size();
    try {
        step_unguarded();
    } catch (const BackendUnavailableError&) {
        state_ = std::move(before);
        log_.resize(log_size);
        series_.resize(series_size);
        if (checkpoint_dir_) save_checkpoint(*checkpoint_dir_);
        throw;
    }
}

MindContext World::mind(AgentRuntime& a, Tick t) {
    return MindContext{a.profile, a.affect, a.memory, gateway_, templates_, config_.clock, t, a.location};
}

void World::step_unguarded() {
    const Tick t = state_.now;
    const Clock& clock = config_.clock;
    const double dt_hours = clock.hours_per_tick();

    if (t > 0 && t % clock.ticks_per_day() == 0) {
        overnight();
    } else if (t > 0) {
        for (auto& a : state_.agents) {
            a.needs = step_needs(a.needs, a.activity, dt_hours, config_.needs, a.activity_since == t - 1);
            a.affect.settle(1.0, config_.affect);
        }
    }

    const auto day = clock.day_of(t);
    for (auto& a : state_.agents) {
        if (a.planned_day != day)
            plan(a, t, day, false);
        else if (a.memo.size() != a.memo_planned)
            plan(a, t, day, true);
    }

    pair_and_converse(t);

    for (auto& a : state_.agents)
        if (a.last_conversation != t) think_and_act(a, t);

    for (auto& a : state_.agents) {
        const Octant before = a.affect.mood().octant;
        const bool had_pending = !a.affect.pending().empty();
        a.affect.accumulate(config_.affect);
        if (had_pending && a.affect.layered()) {
            const auto& m = a.affect.mood();
            emit(t, a, "mood",
                 {{"octant", std::string(to_string(m.octant))},
                  {"changed", m.octant != before},
                  {"position", {m.position.p, m.position.a, m.position.d}},
                  {"intensity", m.intensity}});
        }
    }

    if ((t + 1) % clock.ticks_per_day() == 0) end_of_day(t);
    record_series(t);
    state_.now = t + 1;
}

void World::overnight() {
    const Clock& clock = config_.clock;
    const double night_hours = (24 * 60 - (clock.day_end_minute - clock.day_start_minute)) / 60.0;
    const double night_ticks = night_hours * 60.0 / clock.tick_minutes;
    for (auto& a : state_.agents) {
        a.needs = step_needs(a.needs, "sleeping", night_hours, config_.needs, true);
        a.affect.settle(night_ticks, config_.affect);
        a.location = a.profile.home;
        a.activity = "sleeping";
        a.target = a.profile.home;
        a.source = ActionSource::Schedule;
        a.driver.clear();
        emit(state_.now, a, "need", {{"reason", "overnight rest"}, {"hours", night_hours}});
    }
}

void World::plan(AgentRuntime& a, Tick from, std::int64_t day, bool replan) {
    PlanInput in;
    in.day = day;
    in.from = from;
    in.previous = a.schedule;
    in.memo = a.memo;
    in.locations = config_.locations();
    auto result = plan_day(mind(a, from), in);
    a.schedule = std::move(result.schedule);
    a.planned_day = day;
    a.memo_planned = a.memo.size();
    a.plan_fallback = result.fallback;
    json entries = json::array();
    for (const auto& e : a.schedule) {
        if (e.end <= from) continue;
        entries.push_back({{"start", config_.clock.format(e.start)},
                           {"end", config_.clock.format_end(e.end)},
                           {"activity", e.activity},
                           {"location", e.location},
                           {"importance", e.importance}});
    }
    json payload{{"day", day}, {"replan", replan}, {"fallback", result.fallback}, {"entries", entries}};
    if (result.fallback) payload["error"] = result.error;
    emit(from, a, "plan", payload);
}

void World::end_of_day(Tick t) {
    const Clock& clock = config_.clock;
    const auto day = clock.day_of(t);
    for (auto& a : state_.agents) {
        auto r = reflect(mind(a, t), Period{clock.day_start(day), t}, config_.thresholds);
        json payload{{"day", day},
                     {"summaries", r.summary.created.size()},
                     {"deleted", r.summary.deleted.size()},
                     {"deferred", r.deferred}};
        if (r.insight) {
            payload["insight_id"] = *r.insight;
            for (const auto& s : a.memory.summarized())
                if (s.id == *r.insight) payload["insight"] = s.insight;
        }
        if (r.deferred) payload["error"] = r.error;
        emit(t, a, "reflection", payload);
        // Drop memo items that are past due.
        std::erase_if(a.memo, [&](const MemoEntry& m) { return m.due && *m.due <= t; });
    }
    for (auto& a : state_.agents) plan(a, clock.day_start(day + 1), day + 1, false);
}

void World::pair_and_converse(Tick t) {
    std::map<std::string, std::vector<AgentRuntime*>> by_place;
    for (auto& a : state_.agents) {
        const bool public_place = std::find(config_.public_locations.begin(), config_.public_locations.end(),
                                            a.location) != config_.public_locations.end();
        if (public_place && a.location == a.target && t - a.last_conversation > config_.conversation_cooldown)
            by_place[a.location].push_back(&a);
    }
    for (auto& [place, group] : by_place) {
        std::set<AgentId> busy;
        for (std::size_t i = 0; i < group.size(); ++i) {
            AgentRuntime& self = *group[i];
            if (busy.count(self.profile.id)) continue;
            for (std::size_t j = i + 1; j < group.size(); ++j) {
                AgentRuntime& other = *group[j];
                if (busy.count(other.profile.id)) continue;
                const auto* rel = self.memory.relation(other.profile.id);
                EncounterContext ctx{self.profile.id, other.profile.id, place,
                                     SurfaceInfo{other.profile.appearance, other.activity}, rel != nullptr};
                const auto d = should_converse(ctx, self.needs, rel, state_.rng, gateway_, templates_, self.profile,
                                               config_.trigger);
                if (!d.converse) continue;

                auto rec = converse(Participant{self.profile, self.affect, self.memory, self.memo},
                                    Participant{other.profile, other.affect, other.memory, other.memo}, gateway_,
                                    templates_, config_.clock, t, place, config_.affect, config_.conversation);
                if (rec.backend_unavailable) throw BackendUnavailableError(rec.error);
                const json payload = to_json(rec, config_.clock);
                for (AgentRuntime* p : {&self, &other}) {
                    p->last_conversation = t;
                    p->activity = "talking with " + (p == &self ? other.profile.name : self.profile.name);
                    p->activity_since = t;
                    emit(t, *p, "conversation", payload);
                    const std::size_t idx = p == &self ? 0 : 1;
                    if (rec.emotions[idx])
                        emit(t, *p, "emotion",
                             {{"emotion", std::string(to_string(rec.emotions[idx]->kind))},
                              {"intensity", rec.emotions[idx]->base_intensity},
                              {"cause", "conversation"}});
                }
                busy.insert(self.profile.id);
                busy.insert(other.profile.id);
                break;
            }
        }
    }
}

std::string World::place_for(const AgentRuntime& a, std::string_view activity) const {
    const auto tokens = tokenize(activity);
    auto has = [&](std::initializer_list<const char*> words) {
        return std::any_of(tokens.begin(), tokens.end(), [&](const std::string& t) {
            return std::any_of(words.begin(), words.end(), [&](const char* w) { return t.starts_with(w); });
        });
    };
    // An explicitly named place wins.
    for (const auto& l : config_.public_locations) {
        const auto lt = tokenize(l);
        if (!lt.empty() && std::search(tokens.begin(), tokens.end(), lt.begin(), lt.end()) != tokens.end()) return l;
    }
    if (has({"home", "nap", "sleep", "tidy", "bed"})) return a.profile.home;
    if (has({"meal", "eat", "lunch", "dinner", "breakfast", "food"})) return "restaurant";
    if (has({"coffee", "chat", "friend"})) return "cafe";
    if (has({"doctor", "check", "medic"})) return "clinic";
    if (has({"walk", "stroll", "jog", "outside"})) return "park";
    if (has({"book", "read", "study"})) return "library";
    if (has({"shop", "buy", "grocer"})) return "store";
    return a.location;
}

std::string World::next_hop(const std::string& from, const std::string& to) const {
    if (from == to) return from;
    // Star topology around the hub: every place is one hop from it.
    if (from == config_.hub || to == config_.hub) return to;
    return config_.hub;
}

void World::set_activity(AgentRuntime& a, Tick t, std::string activity, std::string target, ActionSource source,
                         std::string driver, double importance, const json& detail) {
    const bool changed = activity != a.activity || target != a.target;
    a.source = source;
    a.driver = std::move(driver);
    if (!changed) return;
    a.activity = std::move(activity);
    a.target = std::move(target);
    a.activity_since = t;
    json payload = detail;
    payload["activity"] = a.activity;
    payload["target"] = a.target;
    payload["source"] = std::string(to_string(source));
    if (!a.driver.empty()) payload["driver"] = a.driver;
    emit(t, a, "action", payload);
    FullMemoryRecord rec;
    rec.tick = t;
    rec.location = a.target;
    rec.content = a.profile.name + ": " + a.activity + " (" + a.target + ")";
    rec.importance = importance;
    rec.emotional_response = a.affect.emotions();
    a.memory.record_event(std::move(rec));
}

void World::think_and_act(AgentRuntime& a, Tick t) {
    const ScheduleEntry* entry = entry_at(a.schedule, t);
    const bool in_transit = a.location != a.target;
    const std::string context = in_transit ? "commute to the " + a.target : (a.activity.empty() ? "idle" : a.activity);

    ThinkingMode mode = sn_select_mode(context, config_.sn, a.rng);
    if (mode == ThinkingMode::DMN && !a.dmn.any_enabled()) mode = ThinkingMode::CEN;
    a.mode = mode;

    if (mode == ThinkingMode::DMN) {
        std::string digest;
        const auto& full = a.memory.full();
        for (std::size_t i = full.size() > 3 ? full.size() - 3 : 0; i < full.size(); ++i)
            digest += full[i].content + "\n";
        if (digest.empty()) digest = context;
        auto ctx = mind(a, t);
        const auto kind = dmn_select(a.dmn, digest, a.profile.goals_text(), &ctx);
        if (kind) {
            auto art = run_dmn_function(*kind, ctx, a.schedule, a.rng);
            json payload{{"function", std::string(to_string(*kind))},
                         {"strategy", std::string(to_string(a.dmn.strategy))},
                         {"context", context},
                         {"ok", art.ok},
                         {"focus", art.focus},
                         {"text", art.text},
                         {"records", art.records}};
            if (art.impression_of) payload["impression_of"] = *art.impression_of;
            if (!art.ok) payload["error"] = art.error;
            emit(t, a, "dmn", payload);
            for (const auto& ev : art.events) {
                const double used = a.affect.feel(ev, a.profile.big_five, config_.affect);
                emit(t, a, "emotion",
                     {{"emotion", std::string(to_string(ev.kind))},
                      {"intensity", used},
                      {"cause", std::string(to_string(*kind))}});
            }
        }
        // The body keeps following the plan while the mind wanders.
        if (a.source == ActionSource::Schedule && entry)
            set_activity(a, t, entry->activity, entry->location, ActionSource::Schedule, "", entry->importance,
                         {{"mode", "DMN"}});
    } else {
        const auto pr = compute_priorities(entry, a.needs, a.affect.emotions(), config_.priority, t);
        auto choice = decide(pr, entry, config_.priority);
        const json detail{{"mode", "CEN"},
                          {"priorities", {{"task", pr.task}, {"need", pr.need}, {"emotion", pr.emotion}}}};
        if (choice.source == ActionSource::Schedule) {
            if (entry)
                set_activity(a, t, entry->activity, entry->location, ActionSource::Schedule, "", entry->importance,
                             detail);
            else
                set_activity(a, t, "idle", a.location, ActionSource::Schedule, "", 0.1, detail);
        } else {
            const std::string driver = choice.need ? std::string(to_string(*choice.need))
                                                   : std::string(to_string(*choice.emotion));
            if (a.source == choice.source && a.driver == driver) {
                a.mode = mode;  // still busy with it
            } else {
                std::string inspiration;
                for (auto it = a.memory.full().rbegin(); it != a.memory.full().rend(); ++it)
                    if (it->inspiration) {
                        inspiration = it->content;
                        break;
                    }
                auto ctx = mind(a, t);
                choose_activity(choice, ctx, entry, inspiration);
                set_activity(a, t, choice.activity, place_for(a, choice.activity), choice.source, driver,
                             std::max(pr.need, pr.emotion), detail);
            }
        }
    }

    if (a.location != a.target) {
        const auto from = a.location;
        a.location = next_hop(a.location, a.target);
        emit(t, a, "move", {{"from", from}, {"to", a.location}, {"target", a.target}});
    }
}

// ---------------------------------------------------------------------------

json World::snapshot(const AgentRuntime& a) const {
    json needs = json::object();
    for (Need n : kAllNeeds) needs[std::string(to_string(n))] = a.needs[n];
    const auto& m = a.affect.mood();
    return {{"emotions", psya::to_json(a.affect.emotions())},
            {"needs", needs},
            {"mood", {{"p", m.position.p}, {"a", m.position.a}, {"d", m.position.d}}},
            {"octant", std::string(to_string(m.octant))},
            {"location", a.location}};
}

void World::emit(Tick t, const AgentRuntime& a, std::string_view kind, json payload) {
    json line{{"tick", t},
              {"time", config_.clock.format(t)},
              {"agent", a.profile.id},
              {"kind", std::string(kind)},
              {"payload", std::move(payload)},
              {"snapshot", snapshot(a)}};
    log_.push_back(line.dump());
}

std::string World::series_header() {
    std::string h = "tick,time,agent,location,activity,mode";
    for (Emotion e : kAllEmotions) h += "," + std::string(to_string(e));
    for (Need n : kAllNeeds) h += "," + std::string(to_string(n));
    h += ",mood_p,mood_a,mood_d,octant";
    return h;
}

void World::record_series(Tick t) {
    auto quote = [](std::string s) {
        if (s.find_first_of(",\"\n") == std::string::npos) return s;
        std::string out = "\"";
        for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
        return out + "\"";
    };
    for (const auto& a : state_.agents) {
        std::ostringstream os;
        os.precision(6);
        os << std::fixed << t << "," << config_.clock.format(t) << "," << a.profile.id << "," << quote(a.location)
           << "," << quote(a.activity) << "," << to_string(a.mode);
        for (Emotion e : kAllEmotions) os << "," << a.affect.emotions()[e];
        for (Need n : kAllNeeds) os << "," << a.needs[n];
        const auto& m = a.affect.mood();
        os << "," << m.position.p << "," << m.position.a << "," << m.position.d << "," << to_string(m.octant);
        series_.push_back(os.str());
    }
}

void World::write_outputs(const std::filesystem::path& dir) const {
    std::filesystem::create_directories(dir);
    std::ofstream log(dir / "trajectory.jsonl", std::ios::trunc);
    for (const auto& l : log_) log << l << "\n";
    std::ofstream csv(dir / "summary.csv", std::ios::trunc);
    csv << series_header() << "\n";
    for (const auto& r : series_) csv << r << "\n";
    if (!log || !csv) throw std::runtime_error("cannot write outputs to " + dir.string());
}

void run_daily(const WorldConfig& config, Gateway& gateway, const TemplateLibrary& templates, Tick ticks,
               const std::filesystem::path& out) {
    World world(config, gateway, templates);
    world.set_checkpoint_dir(out / "checkpoint");
    try {
        world.run(ticks);
    } catch (const BackendUnavailableError&) {
        world.write_outputs(out);
        throw;
    }
    world.write_outputs(out);
}

}  // namespace psya
