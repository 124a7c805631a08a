#pragma once

// Triple-network thinking: the salience network picks between goal-directed
// (CEN) and spontaneous (DMN) thought; CEN plans, reflects and decides what
// to do next, DMN simulates scenarios, reflects on self and others, and
// lets the mind wander.

#include "psya/affect.hpp"
#include "psya/agent.hpp"
#include "psya/backend.hpp"
#include "psya/memory.hpp"
#include "psya/rng.hpp"
#include "psya/templates.hpp"

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace psya {

enum class ThinkingMode { CEN, DMN };

std::string_view to_string(ThinkingMode m);

struct SnConfig {
    std::vector<std::string> relaxed_contexts = {"walk", "rest", "idle", "commute", "daydream"};
    double disturbance_prob = 0.1;

    /// True when some word of the context starts with a relaxed tag ("walking" matches "walk",
    /// "commuting" matches "commute").
    bool is_relaxed(std::string_view context) const;
};

/// Relaxed contexts always go to DMN. Task contexts go to CEN unless a
/// disturbance fires; the rng is only drawn for task contexts.
ThinkingMode sn_select_mode(std::string_view context, const SnConfig& cfg, Rng& rng);

/// Two-exponential priority curve over a level x in [0, 1]:
/// x <= 0.5: 1 - exp(alpha (beta - x)), otherwise exp(gamma (x - delta)).
struct NeedCurve {
    double alpha = -6.438;
    double beta = 0.5 + 0.69314718055994531 / 6.438;
    double gamma = -6.438;
    double delta = 0.5 - 0.69314718055994531 / 6.438;

    double operator()(double x) const;
};

struct PriorityParams {
    double task_weight = 0.5;  // alpha_t
    NeedCurve need_curve;
    NeedCurve emotion_curve;
    double threshold = 0.65;
    double day_length_ticks = 72.0;
};

struct Priorities {
    double task = 0.0;
    double need = 0.0;
    double emotion = 0.0;
    Need min_need = Need::Fullness;
    double min_need_level = 0.0;
    Emotion max_negative = Emotion::Sadness;
    double max_negative_level = 0.0;
};

/// Task priority blends the entry's importance with urgency from the time
/// left in its window; need and emotion priorities run the curves on the
/// lowest need and on one minus the strongest negative emotion.
Priorities compute_priorities(const ScheduleEntry* entry, const NeedsState& needs, const EmotionVector& emotions,
                              const PriorityParams& params, Tick now);

enum class ActionSource { Schedule, Need, Emotion };

std::string_view to_string(ActionSource s);

struct ActionChoice {
    ActionSource source = ActionSource::Schedule;
    std::optional<Need> need;
    std::optional<Emotion> emotion;
    /// Level of the driving need or emotion.
    double level = 0.0;
    std::string activity;
    std::string location;
};

/// Follows the schedule unless the highest priority clears the threshold;
/// ties go need, then emotion, then task. The activity is filled in only for
/// schedule choices.
ActionChoice decide(const Priorities& priorities, const ScheduleEntry* entry, const PriorityParams& params);

/// Everything a backend-backed thinking step reads about the agent.
struct MindContext {
    const AgentProfile& profile;
    const AffectState& affect;
    MemoryStore& memory;
    Gateway& gateway;
    const TemplateLibrary& templates;
    const Clock& clock;
    Tick now = 0;
    std::string location;
};

std::string mood_text(const MoodState& mood);

/// Fills in the activity for a need or emotion choice with one backend call.
void choose_activity(ActionChoice& choice, const MindContext& ctx, const ScheduleEntry* entry,
                     std::string_view inspiration);

struct PlanInput {
    std::int64_t day = 0;
    Tick from = 0;  // re-plan from here; earlier entries are kept
    std::vector<ScheduleEntry> previous;
    std::vector<MemoEntry> memo;
    std::vector<std::string> locations;
};

struct PlanResult {
    std::vector<ScheduleEntry> schedule;
    bool fallback = false;
    std::string error;
};

/// Generates the schedule for the rest of the window. Memo items due that
/// day get their own entries. On backend failure the previous day's plan is
/// reused (shifted onto this day) and the result is flagged.
PlanResult plan_day(const MindContext& ctx, const PlanInput& input);

/// Location named in plan output mapped onto the town: "home" and
/// "workplace" become the agent's own places; unknown names fall back to home.
std::string resolve_location(std::string_view name, const AgentProfile& profile,
                             const std::vector<std::string>& locations);

struct ReflectResult {
    std::optional<RecordId> insight;
    SummaryReport summary;
    bool deferred = false;
    std::string error;
};

/// Higher-level conclusion over the period (stored as a summarized record),
/// followed by summarization of the period's full-tier records.
ReflectResult reflect(const MindContext& ctx, Period period, const SummaryThresholds& thresholds = {});

enum class DmnFunction : std::size_t { ScenarioSimulation = 0, SelfSocialCognition, MindWandering };

inline constexpr std::array<DmnFunction, 3> kAllDmnFunctions = {
    DmnFunction::ScenarioSimulation, DmnFunction::SelfSocialCognition, DmnFunction::MindWandering};

std::string_view to_string(DmnFunction f);
/// One-line description used for similarity and priority selection.
std::string_view describe(DmnFunction f);

enum class DmnStrategy { Cyclic, Similarity, Priority };

std::string_view to_string(DmnStrategy s);
DmnStrategy dmn_strategy_from_name(std::string_view name);

struct DmnSelector {
    DmnStrategy strategy = DmnStrategy::Cyclic;
    std::size_t cursor = 0;  // next index for cyclic selection
    std::array<bool, 3> enabled = {true, true, true};

    bool any_enabled() const { return enabled[0] || enabled[1] || enabled[2]; }
};

/// Picks the DMN function to run; nullopt when every function is disabled.
std::optional<DmnFunction> dmn_select(DmnSelector& selector, std::string_view memory_digest, std::string_view goals,
                                      const MindContext* ctx);

struct DmnArtifact {
    DmnFunction kind = DmnFunction::MindWandering;
    bool ok = false;
    std::string text;
    std::string focus;
    std::vector<EmotionEvent> events;
    std::vector<RecordId> records;
    std::optional<AgentId> impression_of;
    std::string error;
};

/// Runs one DMN function, writing its records into ctx.memory. Backend
/// failures leave memory untouched and come back as !ok.
DmnArtifact run_dmn_function(DmnFunction kind, const MindContext& ctx, const std::vector<ScheduleEntry>& schedule,
                             Rng& rng);

}  // namespace psya
