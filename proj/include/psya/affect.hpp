#pragma once

// Layered affect: personality (long-term), mood (medium-term) and emotion
// (short-term), all projected into Pleasure-Arousal-Dominance space.

#include "psya/clock.hpp"

#include <array>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace psya {

struct PadVector {
    double p = 0.0;
    double a = 0.0;
    double d = 0.0;

    friend PadVector operator+(PadVector x, PadVector y) { return {x.p + y.p, x.a + y.a, x.d + y.d}; }
    friend PadVector operator-(PadVector x, PadVector y) { return {x.p - y.p, x.a - y.a, x.d - y.d}; }
    friend PadVector operator*(double s, PadVector x) { return {s * x.p, s * x.a, s * x.d}; }
    friend bool operator==(const PadVector&, const PadVector&) = default;

    double dot(PadVector o) const { return p * o.p + a * o.a + d * o.d; }
    double norm() const;
    /// Each component clamped to [-1, 1].
    PadVector clamped() const;
    /// Euclidean length normalised by the cube diagonal, so in [0, 1] for clamped vectors.
    double intensity() const;
};

/// Cosine of the angle between two PAD points; 0 when either is the origin.
double cosine(PadVector x, PadVector y);

/// Big-Five traits, each in [0, 1].
struct PersonalityProfile {
    double extraversion = 0.5;
    double agreeableness = 0.5;
    double neuroticism = 0.5;
    double openness = 0.5;
    double conscientiousness = 0.5;

    std::array<double, 5> as_array() const {
        return {extraversion, agreeableness, neuroticism, openness, conscientiousness};
    }
    bool valid() const;
};

enum class Emotion : std::size_t { Happiness = 0, Sadness, Anger, Fear, Disgust, Surprise };

inline constexpr std::array<Emotion, 6> kAllEmotions = {Emotion::Happiness, Emotion::Sadness, Emotion::Anger,
                                                        Emotion::Fear,      Emotion::Disgust, Emotion::Surprise};
inline constexpr std::array<Emotion, 4> kNegativeEmotions = {Emotion::Sadness, Emotion::Anger, Emotion::Fear,
                                                             Emotion::Disgust};

std::string_view to_string(Emotion e);
/// Throws std::invalid_argument for names outside the six basic emotions.
Emotion emotion_from_name(std::string_view name);

/// Six emotion intensities in [0, 1]; 0.5 is neutral.
class EmotionVector {
public:
    EmotionVector() { values_.fill(0.5); }

    double operator[](Emotion e) const { return values_[static_cast<std::size_t>(e)]; }
    double& operator[](Emotion e) { return values_[static_cast<std::size_t>(e)]; }
    const std::array<double, 6>& values() const { return values_; }

    bool in_bounds() const;
    /// L-infinity distance from the neutral vector (all 0.5).
    double distance_from_neutral() const;

    friend bool operator==(const EmotionVector&, const EmotionVector&) = default;

private:
    std::array<double, 6> values_{};
};

struct EmotionEvent {
    Emotion kind = Emotion::Happiness;
    double base_intensity = 0.0;
    Tick timestamp = 0;
};

enum class Octant { Exuberant, Dependent, Relaxed, Docile, Hostile, Anxious, Disdainful, Bored };

std::string_view to_string(Octant o);

/// Sign pattern of `v`; a zero component counts as positive.
Octant classify_octant(PadVector v);

struct MoodState {
    PadVector position;
    Octant octant = Octant::Exuberant;
    double intensity = 0.0;

    /// Mood at `position` (clamped) with octant and intensity derived from it.
    static MoodState at(PadVector position);
};

struct AffectParams {
    double pull_rate = 0.3;           // alpha_m
    double push_rate = 0.1;           // beta_m
    double emotion_half_life = 8.0;   // ticks (2 h at 15-minute ticks)
    double mood_half_life = 96.0;     // ticks (24 h)
    double mood_weight_base = 0.2;
    double mood_weight_span = 0.3;

    bool valid() const;
};

/// Personality weight rows for P, A and D over (E, A, N, O, C).
inline constexpr std::array<double, 5> kPleasureWeights = {0.21, 0.59, 0.19, 0.0, 0.0};
inline constexpr std::array<double, 5> kArousalWeights = {0.0, 0.30, -0.57, 0.15, 0.0};
inline constexpr std::array<double, 5> kDominanceWeights = {0.60, -0.32, 0.0, 0.25, 0.17};

/// Unclamped linear projection of the traits; exposed for the linearity check.
PadVector project_personality(const PersonalityProfile& profile);

/// Personality mapped into PAD space, clamped. Also the agent's default mood.
PadVector map_personality_to_pad(const PersonalityProfile& profile);

PadVector emotion_basis(Emotion kind);
/// Name-based lookup; throws std::invalid_argument for unknown names.
PadVector emotion_basis(std::string_view kind);

struct WeightedPad {
    PadVector point;
    double intensity = 0.0;
};

struct EmotionCenter {
    PadVector position;
    double total_intensity = 0.0;
    double mean_intensity = 0.0;
};

/// Raised when the weighted mean has no mass to work with.
class UndefinedCenterError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Intensity-weighted mean of the event points.
EmotionCenter virtual_emotion_center(std::span<const WeightedPad> events);

/// One accumulation step: pull toward the center when the mood sits between
/// the origin and the center (or on the opposite side), push away otherwise.
MoodState update_mood(const MoodState& current, PadVector center, const AffectParams& params);

/// Mood-adjusted intensity for an incoming event.
double effective_intensity(const MoodState& mood, const PersonalityProfile& profile, const EmotionEvent& event,
                           const AffectParams& params);

EmotionVector apply_event(const EmotionVector& state, const MoodState& mood, const PersonalityProfile& profile,
                          const EmotionEvent& event, const AffectParams& params);

struct DecayResult {
    EmotionVector emotions;
    MoodState mood;
};

DecayResult decay(const EmotionVector& state, const MoodState& mood, PadVector default_mood, double dt,
                  const AffectParams& params);

/// Per-agent affect layers plus the events awaiting the next mood accumulation.
///
/// With `layered == false` the mood and personality layers are bypassed: events
/// land on the emotion vector at their base intensity and the mood never moves.
class AffectState {
public:
    AffectState() = default;
    AffectState(const PersonalityProfile& profile, bool layered);

    const EmotionVector& emotions() const { return emotions_; }
    const MoodState& mood() const { return mood_; }
    PadVector default_mood() const { return default_mood_; }
    bool layered() const { return layered_; }
    const std::vector<WeightedPad>& pending() const { return pending_; }

    /// Applies the event and queues it for accumulation. Returns the intensity used.
    double feel(const EmotionEvent& event, const PersonalityProfile& profile, const AffectParams& params);

    /// Folds pending events into the mood. No-op when nothing is pending.
    void accumulate(const AffectParams& params);

    void settle(double dt, const AffectParams& params);

    // Restoration from checkpoints.
    void restore(const EmotionVector& emotions, const MoodState& mood, PadVector default_mood, bool layered,
                 std::vector<WeightedPad> pending);

private:
    EmotionVector emotions_;
    MoodState mood_;
    PadVector default_mood_;
    bool layered_ = true;
    std::vector<WeightedPad> pending_;
};

}  // namespace psya
