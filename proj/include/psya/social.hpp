#pragma once

// Conversations between agents: the trigger (with the stranger gate), the
// dialogue itself and the bookkeeping afterwards.

#include "psya/affect.hpp"
#include "psya/agent.hpp"
#include "psya/backend.hpp"
#include "psya/memory.hpp"
#include "psya/rng.hpp"
#include "psya/templates.hpp"

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace psya {

struct SurfaceInfo {
    std::string appearance;
    std::string behavior;
};

struct EncounterContext {
    AgentId self;
    AgentId other;
    std::string location;
    SurfaceInfo other_surface;
    bool acquainted = false;
};

struct TriggerParams {
    double base = 0.2;
    double intimacy_weight = 0.5;
    double social_weight = 0.3;
};

/// p = clamp(base + w_i * intimacy + w_s * (1 - social), 0, 1).
double conversation_probability(double intimacy, double social_need, const TriggerParams& params = {});

struct TriggerDecision {
    bool converse = false;
    double probability = 0.0;
    bool judged = false;        // a stranger judgment was requested
    std::string judgment;       // "approach" / "avoid"
};

/// Acquaintances: one draw against p. Strangers: a backend judgment of the
/// surface information first; "avoid" ends it without drawing, otherwise
/// the draw uses p with the intimacy term at zero.
TriggerDecision should_converse(const EncounterContext& ctx, const NeedsState& needs,
                                const RelationalMemoryRecord* relation, Rng& rng, Gateway& gateway,
                                const TemplateLibrary& templates, const AgentProfile& self,
                                const TriggerParams& params = {});

struct Turn {
    AgentId speaker;
    std::string text;
};

/// One side of a conversation.
struct Participant {
    const AgentProfile& profile;
    AffectState& affect;
    MemoryStore& memory;
    std::vector<MemoEntry>& memo;
};

struct ConversationSettings {
    int max_turns = 8;
    double max_intimacy_delta = 0.2;
    std::string end_marker = "[END]";
    /// Importance of the memory each side keeps of the conversation.
    double memory_importance = 0.5;
};

struct ConversationRecord {
    std::array<AgentId, 2> participants;
    Tick tick = 0;
    std::string location;
    std::vector<Turn> turns;
    std::string summary;
    std::vector<MemoEntry> commitments;
    std::array<double, 2> intimacy_delta{0.0, 0.0};
    std::array<std::string, 2> impressions;
    std::array<std::optional<EmotionEvent>, 2> emotions;
    bool interrupted = false;
    /// Set when the backend became unreachable mid-conversation.
    bool backend_unavailable = false;
    std::string error;
};

json to_json(const ConversationRecord& r, const Clock& clock);

/// Runs the dialogue, then extracts summary, intimacy changes, impressions
/// and commitments, and applies them to both participants. A backend failure
/// mid-dialogue closes the conversation with the turns so far and the
/// summary "interrupted".
ConversationRecord converse(Participant a, Participant b, Gateway& gateway, const TemplateLibrary& templates,
                            const Clock& clock, Tick now, const std::string& location, const AffectParams& affect,
                            const ConversationSettings& settings = {});

}  // namespace psya
