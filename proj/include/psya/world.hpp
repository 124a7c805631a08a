#pragma once

// The town: a clock, a handful of places, agents stepping tick by tick.

#include "psya/affect.hpp"
#include "psya/agent.hpp"
#include "psya/backend.hpp"
#include "psya/cognition.hpp"
#include "psya/memory.hpp"
#include "psya/rng.hpp"
#include "psya/social.hpp"
#include "psya/templates.hpp"

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace psya {

struct ActivityEffect {
    std::string name;                   // "eating", "sleeping", ...
    std::vector<std::string> keywords;  // matched as word prefixes of the activity
    Need need = Need::Fullness;
    double amount = 0.0;
    /// Per-hour effects scale with dt; the others apply once when the activity starts.
    bool per_hour = false;
};

struct NeedsDynamics {
    /// Per-hour drift in (fullness, fun, health, social, energy) order.
    std::array<double, 5> drift_per_hour = {-0.05, -0.03, 0.0, -0.03, -0.04};
    std::vector<ActivityEffect> effects = default_effects();

    static std::vector<ActivityEffect> default_effects();
};

/// Effect names whose keywords match the activity, in table order.
std::vector<std::string> activity_tags(std::string_view activity, const NeedsDynamics& dyn = {});

/// Drift over dt hours plus the activity's effects; one-off effects apply
/// only when `activity_started` and dt > 0. Clamped to [0, 1].
NeedsState step_needs(const NeedsState& needs, std::string_view activity, double dt_hours,
                      const NeedsDynamics& dyn = {}, bool activity_started = true);

struct Relationship {
    AgentId a;
    AgentId b;
    std::string kind;
    double intimacy = 0.5;
};

struct WorldConfig {
    Clock clock;
    std::vector<std::string> public_locations = {"restaurant", "cafe", "library", "clinic",
                                                 "store",      "park", "central square"};
    /// Every public place and home connects to this one.
    std::string hub = "central square";
    std::vector<AgentProfile> agents;
    std::vector<Relationship> relationships;
    std::uint64_t seed = 7;

    AffectParams affect;
    bool layered_affect = true;
    PriorityParams priority;
    SnConfig sn;
    DmnStrategy dmn_strategy = DmnStrategy::Cyclic;
    std::array<bool, 3> dmn_enabled = {true, true, true};
    RetrievalWeights retrieval;
    SummaryThresholds thresholds;
    ConversationSettings conversation;
    TriggerParams trigger;
    /// Ticks after a conversation before the agent can start another.
    int conversation_cooldown = 4;
    NeedsDynamics needs;

    /// Public places followed by homes.
    std::vector<std::string> locations() const;
    /// Throws ConfigurationError when inconsistent.
    void validate() const;

    static WorldConfig from_json(const json& j);
    json to_json() const;
};

/// The eight-resident town: ages 20-60, four women and four men, random
/// traits, six working at town places and two newcomers, seeded
/// relationships of each kind. Everything is drawn from `seed`.
WorldConfig generate_town(std::uint64_t seed, int agents = 8, int employed = 6);

json to_json(const AgentProfile& p);
AgentProfile agent_profile_from_json(const json& j);

/// Per-agent simulation state.
struct AgentRuntime {
    AgentProfile profile;
    AffectState affect;
    NeedsState needs;
    MemoryStore memory;
    std::vector<MemoEntry> memo;
    std::vector<ScheduleEntry> schedule;
    std::string location;
    std::string activity;
    std::string target;  // where the current activity happens
    ActionSource source = ActionSource::Schedule;
    std::string driver;  // need or emotion name behind a non-schedule activity
    Tick activity_since = -1;
    std::int64_t planned_day = -1;
    std::size_t memo_planned = 0;
    DmnSelector dmn;
    Rng rng;
    Tick last_conversation = -1000;
    ThinkingMode mode = ThinkingMode::CEN;
    bool plan_fallback = false;
};

class World {
public:
    World(WorldConfig config, Gateway& gateway, const TemplateLibrary& templates);

    /// Advances one tick. A BackendUnavailableError leaves the world as it
    /// was before the tick, writes a checkpoint (when a directory is set)
    /// and propagates.
    void step();
    void run(Tick ticks);

    Tick now() const { return state_.now; }
    const WorldConfig& config() const { return config_; }
    const std::vector<AgentRuntime>& agents() const { return state_.agents; }
    const AgentRuntime* agent(const AgentId& id) const;

    /// Trajectory as JSON Lines, in emission order.
    const std::vector<std::string>& log() const { return log_; }
    /// Per-tick, per-agent rows for the summary CSV.
    const std::vector<std::string>& series() const { return series_; }
    static std::string series_header();

    void set_checkpoint_dir(std::filesystem::path dir) { checkpoint_dir_ = std::move(dir); }
    void save_checkpoint(const std::filesystem::path& dir) const;
    /// Rebuilds a world from a checkpoint; the log starts empty.
    static World resume(const std::filesystem::path& dir, Gateway& gateway, const TemplateLibrary& templates);

    void write_outputs(const std::filesystem::path& dir) const;

private:
    struct State {
        Tick now = 0;
        std::vector<AgentRuntime> agents;
        Rng rng;
    };

    World(WorldConfig config, Gateway& gateway, const TemplateLibrary& templates, State state);

    void step_unguarded();
    void overnight();
    void pair_and_converse(Tick t);
    void think_and_act(AgentRuntime& a, Tick t);
    void plan(AgentRuntime& a, Tick from, std::int64_t day, bool replan);
    void end_of_day(Tick t);
    void set_activity(AgentRuntime& a, Tick t, std::string activity, std::string target, ActionSource source,
                      std::string driver, double importance, const json& detail);
    std::string next_hop(const std::string& from, const std::string& to) const;
    std::string place_for(const AgentRuntime& a, std::string_view activity) const;
    MindContext mind(AgentRuntime& a, Tick t);

    void emit(Tick t, const AgentRuntime& a, std::string_view kind, json payload);
    json snapshot(const AgentRuntime& a) const;
    void record_series(Tick t);

    WorldConfig config_;
    Gateway& gateway_;
    const TemplateLibrary& templates_;
    State state_;
    std::vector<std::string> log_;
    std::vector<std::string> series_;
    std::optional<std::filesystem::path> checkpoint_dir_;
};

/// Runs the daily-life scenario and writes trajectory.jsonl and summary.csv into `out`.
void run_daily(const WorldConfig& config, Gateway& gateway, const TemplateLibrary& templates, Tick ticks,
               const std::filesystem::path& out);

}  // namespace psya
