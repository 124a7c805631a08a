#pragma once

#include "psya/affect.hpp"
#include "psya/clock.hpp"
#include "psya/rng.hpp"

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace psya {

using AgentId = std::string;

enum class GoalHorizon { Short, Long };

struct Goal {
    std::string text;
    GoalHorizon horizon = GoalHorizon::Short;
};

struct AgentProfile {
    AgentId id;
    std::string name;
    std::string gender;
    int age = 30;
    std::string occupation;
    PersonalityProfile big_five;
    /// Prose for each trait in (E, A, N, O, C) order.
    std::array<std::string, 5> trait_descriptions;
    std::vector<Goal> goals;
    std::string home;
    std::string workplace;
    std::string appearance;
    /// Extra persona lines (e.g. value statements injected by experiments).
    std::vector<std::string> beliefs;

    /// Multi-line natural-language persona used in prompts.
    std::string describe() const;
    std::string goals_text() const;
};

enum class Need : std::size_t { Fullness = 0, Fun, Health, Social, Energy };

inline constexpr std::array<Need, 5> kAllNeeds = {Need::Fullness, Need::Fun, Need::Health, Need::Social,
                                                  Need::Energy};

std::string_view to_string(Need n);
Need need_from_name(std::string_view name);

class NeedsState {
public:
    /// Energy starts full, everything else at the midpoint.
    NeedsState() : values_{0.5, 0.5, 0.5, 0.5, 1.0} {}

    double operator[](Need n) const { return values_[static_cast<std::size_t>(n)]; }
    double& operator[](Need n) { return values_[static_cast<std::size_t>(n)]; }
    const std::array<double, 5>& values() const { return values_; }

    Need minimal() const;
    bool in_bounds() const;
    void clamp();

    friend bool operator==(const NeedsState&, const NeedsState&) = default;

private:
    std::array<double, 5> values_;
};

struct MemoEntry {
    std::string text;
    std::optional<Tick> due;
    /// Set for commitments made to another agent.
    std::optional<AgentId> commitment_with;
    /// Where it happens; empty when unknown.
    std::string location;
    Tick created = 0;
};

struct ScheduleEntry {
    Tick start = 0;
    Tick end = 0;  // exclusive
    std::string activity;
    std::string location;
    double importance = 0.5;

    bool covers(Tick t) const { return start <= t && t < end; }
    bool overlaps(Tick t0, Tick t1) const { return start < t1 && t0 < end; }
};

/// Entry covering `t`, if any.
const ScheduleEntry* entry_at(const std::vector<ScheduleEntry>& schedule, Tick t);

/// Randomised persona with traits, age and gender drawn from `rng`.
struct PersonaSpec {
    std::string id;
    std::string occupation;
    std::string gender;  // empty: drawn
    int min_age = 20;
    int max_age = 60;
    std::string home;
    std::string workplace;
};

AgentProfile generate_persona(const PersonaSpec& spec, Rng& rng);

/// Short prose for a trait value ("very high extraversion: ...").
std::string describe_trait(std::size_t trait_index, double value);

}  // namespace psya
