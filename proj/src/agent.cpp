#include "psya/agent.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>
#include <stdexcept>

namespace psya {

namespace {

constexpr std::array<std::string_view, 5> kTraitNames = {"extraversion", "agreeableness", "neuroticism", "openness",
                                                         "conscientiousness"};

// Low / high poles for each trait, used to render prose descriptions.
constexpr std::array<std::array<std::string_view, 2>, 5> kTraitPoles = {{
    {"reserved and prefers quiet, solitary activities", "outgoing, talkative and energised by company"},
    {"blunt, sceptical and competitive", "warm, trusting and eager to help"},
    {"calm and emotionally steady", "easily worried and quick to feel stressed"},
    {"practical and fond of routine", "curious, imaginative and open to new experiences"},
    {"spontaneous and loosely organised", "disciplined, careful and reliable"},
}};

constexpr std::array<std::string_view, 8> kFemaleNames = {"Alice", "Beatrice", "Clara", "Diana",
                                                          "Elena", "Fiona",    "Grace", "Hannah"};
constexpr std::array<std::string_view, 8> kMaleNames = {"Adam", "Ben", "Carl", "David",
                                                        "Ethan", "Frank", "George", "Henry"};
constexpr std::array<std::string_view, 8> kSurnames = {"Moore", "Baker", "Chen", "Diaz",
                                                       "Evans", "Fischer", "Garcia", "Hughes"};

}  // namespace

std::string describe_trait(std::size_t trait_index, double value) {
    const auto& poles = kTraitPoles.at(trait_index);
    std::string level;
    if (value < 0.2) level = "very low";
    else if (value < 0.4) level = "low";
    else if (value < 0.6) level = "moderate";
    else if (value < 0.8) level = "high";
    else level = "very high";
    std::string text = level + " " + std::string(kTraitNames[trait_index]) + ": ";
    if (value < 0.4) text += poles[0];
    else if (value >= 0.6) text += poles[1];
    else text += "balanced between being " + std::string(poles[0]) + " and " + std::string(poles[1]);
    return text;
}

std::string AgentProfile::goals_text() const {
    if (goals.empty()) return "no particular goals";
    std::string out;
    for (const auto& g : goals) {
        if (!out.empty()) out += "; ";
        out += g.text + (g.horizon == GoalHorizon::Long ? " (long-term)" : " (short-term)");
    }
    return out;
}

std::string AgentProfile::describe() const {
    std::ostringstream os;
    os << "Name: " << name << "\n";
    os << "Gender: " << gender << ", age " << age << "\n";
    os << "Occupation: " << (occupation.empty() ? "none" : occupation) << "\n";
    os << "Personality:\n";
    const auto traits = big_five.as_array();
    for (std::size_t i = 0; i < 5; ++i) {
        const auto& d = trait_descriptions[i];
        os << "- " << (d.empty() ? describe_trait(i, traits[i]) : d) << "\n";
    }
    os << "Goals: " << goals_text();
    for (const auto& b : beliefs) os << "\n" << b;
    return os.str();
}

std::string_view to_string(Need n) {
    switch (n) {
        case Need::Fullness: return "fullness";
        case Need::Fun: return "fun";
        case Need::Health: return "health";
        case Need::Social: return "social";
        case Need::Energy: return "energy";
    }
    return "unknown";
}

Need need_from_name(std::string_view name) {
    for (Need n : kAllNeeds)
        if (to_string(n) == name) return n;
    throw std::invalid_argument("unknown need: " + std::string(name));
}

Need NeedsState::minimal() const {
    // First minimum in declaration order.
    Need best = Need::Fullness;
    for (Need n : kAllNeeds)
        if ((*this)[n] < (*this)[best]) best = n;
    return best;
}

bool NeedsState::in_bounds() const {
    return std::all_of(values_.begin(), values_.end(), [](double v) { return v >= 0.0 && v <= 1.0; });
}

void NeedsState::clamp() {
    for (auto& v : values_) v = std::clamp(v, 0.0, 1.0);
}

const ScheduleEntry* entry_at(const std::vector<ScheduleEntry>& schedule, Tick t) {
    for (const auto& e : schedule)
        if (e.covers(t)) return &e;
    return nullptr;
}

AgentProfile generate_persona(const PersonaSpec& spec, Rng& rng) {
    AgentProfile p;
    p.id = spec.id;
    p.gender = spec.gender.empty() ? (rng.bernoulli(0.5) ? "female" : "male") : spec.gender;
    const auto& first = p.gender == "female" ? kFemaleNames : kMaleNames;
    p.name = std::string(first[static_cast<std::size_t>(rng.uniform_int(0, 7))]) + " " +
             std::string(kSurnames[static_cast<std::size_t>(rng.uniform_int(0, 7))]);
    p.age = static_cast<int>(rng.uniform_int(spec.min_age, spec.max_age));
    p.occupation = spec.occupation;
    p.big_five.extraversion = rng.uniform();
    p.big_five.agreeableness = rng.uniform();
    p.big_five.neuroticism = rng.uniform();
    p.big_five.openness = rng.uniform();
    p.big_five.conscientiousness = rng.uniform();
    const auto traits = p.big_five.as_array();
    for (std::size_t i = 0; i < 5; ++i) p.trait_descriptions[i] = describe_trait(i, traits[i]);
    p.home = spec.home;
    p.workplace = spec.workplace;
    static constexpr std::array<std::string_view, 6> kLooks = {
        "neatly dressed and smiling", "wearing a worn jacket and frowning", "casually dressed, humming a tune",
        "in work clothes, looking tired", "carrying a stack of books",  "walking briskly with headphones on"};
    p.appearance = std::string(kLooks[static_cast<std::size_t>(rng.uniform_int(0, 5))]);
    return p;
}

}  // namespace psya
