#include "psya/affect.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

namespace psya {

namespace {

constexpr double kSqrt3 = 1.7320508075688772;

double clamp1(double x) { return std::clamp(x, -1.0, 1.0); }
double clamp01(double x) { return std::clamp(x, 0.0, 1.0); }

double dot5(const std::array<double, 5>& w, const std::array<double, 5>& c) {
    double s = 0.0;
    for (std::size_t i = 0; i < 5; ++i) s += w[i] * c[i];
    return s;
}

}  // namespace

double PadVector::norm() const { return std::sqrt(dot(*this)); }

PadVector PadVector::clamped() const { return {clamp1(p), clamp1(a), clamp1(d)}; }

double PadVector::intensity() const { return std::min(1.0, norm() / kSqrt3); }

double cosine(PadVector x, PadVector y) {
    const double nx = x.norm();
    const double ny = y.norm();
    if (nx == 0.0 || ny == 0.0) return 0.0;
    return std::clamp(x.dot(y) / (nx * ny), -1.0, 1.0);
}

bool PersonalityProfile::valid() const {
    for (double c : as_array())
        if (!(c >= 0.0 && c <= 1.0)) return false;
    return true;
}

std::string_view to_string(Emotion e) {
    switch (e) {
        case Emotion::Happiness: return "happiness";
        case Emotion::Sadness: return "sadness";
        case Emotion::Anger: return "anger";
        case Emotion::Fear: return "fear";
        case Emotion::Disgust: return "disgust";
        case Emotion::Surprise: return "surprise";
    }
    return "unknown";
}

Emotion emotion_from_name(std::string_view name) {
    std::string lower(name);
    std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
    for (Emotion e : kAllEmotions)
        if (to_string(e) == lower) return e;
    throw std::invalid_argument("unknown emotion kind: " + std::string(name));
}

bool EmotionVector::in_bounds() const {
    return std::all_of(values_.begin(), values_.end(), [](double v) { return v >= 0.0 && v <= 1.0; });
}

double EmotionVector::distance_from_neutral() const {
    double m = 0.0;
    for (double v : values_) m = std::max(m, std::abs(v - 0.5));
    return m;
}

std::string_view to_string(Octant o) {
    switch (o) {
        case Octant::Exuberant: return "Exuberant";
        case Octant::Dependent: return "Dependent";
        case Octant::Relaxed: return "Relaxed";
        case Octant::Docile: return "Docile";
        case Octant::Hostile: return "Hostile";
        case Octant::Anxious: return "Anxious";
        case Octant::Disdainful: return "Disdainful";
        case Octant::Bored: return "Bored";
    }
    return "Unknown";
}

Octant classify_octant(PadVector v) {
    const bool p = v.p >= 0.0;
    const bool a = v.a >= 0.0;
    const bool d = v.d >= 0.0;
    if (p) {
        if (a) return d ? Octant::Exuberant : Octant::Dependent;
        return d ? Octant::Relaxed : Octant::Docile;
    }
    if (a) return d ? Octant::Hostile : Octant::Anxious;
    return d ? Octant::Disdainful : Octant::Bored;
}

MoodState MoodState::at(PadVector position) {
    MoodState m;
    m.position = position.clamped();
    m.octant = classify_octant(m.position);
    m.intensity = m.position.intensity();
    return m;
}

bool AffectParams::valid() const {
    return pull_rate > 0.0 && pull_rate <= 1.0 && push_rate > 0.0 && push_rate <= 1.0 && emotion_half_life > 0.0 &&
           mood_half_life > 0.0;
}

PadVector project_personality(const PersonalityProfile& profile) {
    const auto c = profile.as_array();
    return {dot5(kPleasureWeights, c), dot5(kArousalWeights, c), dot5(kDominanceWeights, c)};
}

PadVector map_personality_to_pad(const PersonalityProfile& profile) { return project_personality(profile).clamped(); }

PadVector emotion_basis(Emotion kind) {
    switch (kind) {
        case Emotion::Happiness: return {0.4, 0.2, 0.1};
        case Emotion::Sadness: return {-0.6, -0.4, -0.5};
        case Emotion::Anger: return {-0.51, 0.59, 0.25};
        case Emotion::Fear: return {-0.64, 0.6, -0.43};
        case Emotion::Disgust: return {-0.4, 0.2, 0.1};
        case Emotion::Surprise: return {0.2, 0.5, 0.1};
    }
    throw std::invalid_argument("unknown emotion kind");
}

PadVector emotion_basis(std::string_view kind) { return emotion_basis(emotion_from_name(kind)); }

EmotionCenter virtual_emotion_center(std::span<const WeightedPad> events) {
    if (events.empty()) throw UndefinedCenterError("virtual emotion center of an empty event list");
    double total = 0.0;
    PadVector weighted;
    for (const auto& e : events) {
        if (!(e.intensity >= 0.0)) throw UndefinedCenterError("negative or NaN event intensity");
        total += e.intensity;
        weighted = weighted + e.intensity * e.point;
    }
    if (total <= 0.0) throw UndefinedCenterError("all event intensities are zero");
    EmotionCenter c;
    c.position = (1.0 / total) * weighted;
    c.total_intensity = total;
    c.mean_intensity = total / static_cast<double>(events.size());
    return c;
}

MoodState update_mood(const MoodState& current, PadVector center, const AffectParams& params) {
    const double center_norm = center.norm();
    if (center_norm == 0.0) return current;
    const PadVector& cur = current.position;
    const double projection = cur.dot(center) / center_norm;
    PadVector next;
    if (projection < center_norm) {
        next = cur + params.pull_rate * (center - cur);
    } else {
        next = cur + params.push_rate * (cur - center);
    }
    return MoodState::at(next);
}

double effective_intensity(const MoodState& mood, const PersonalityProfile& profile, const EmotionEvent& event,
                           const AffectParams& params) {
    const double weight = params.mood_weight_base + params.mood_weight_span * profile.neuroticism;
    const double alignment = cosine(emotion_basis(event.kind), mood.position) * mood.intensity;
    return clamp01(event.base_intensity + weight * alignment);
}

EmotionVector apply_event(const EmotionVector& state, const MoodState& mood, const PersonalityProfile& profile,
                          const EmotionEvent& event, const AffectParams& params) {
    EmotionVector next = state;
    const double i = effective_intensity(mood, profile, event, params);
    next[event.kind] = std::max(next[event.kind], i);
    return next;
}

DecayResult decay(const EmotionVector& state, const MoodState& mood, PadVector default_mood, double dt,
                  const AffectParams& params) {
    if (dt <= 0.0) return {state, mood};
    const double emotion_keep = std::exp2(-dt / params.emotion_half_life);
    const double mood_keep = std::exp2(-dt / params.mood_half_life);
    DecayResult r;
    for (Emotion e : kAllEmotions) r.emotions[e] = clamp01(0.5 + (state[e] - 0.5) * emotion_keep);
    r.mood = MoodState::at(default_mood + mood_keep * (mood.position - default_mood));
    return r;
}

AffectState::AffectState(const PersonalityProfile& profile, bool layered)
    : default_mood_(map_personality_to_pad(profile)), layered_(layered) {
    mood_ = MoodState::at(layered ? default_mood_ : PadVector{});
}

double AffectState::feel(const EmotionEvent& event, const PersonalityProfile& profile, const AffectParams& params) {
    const double base = clamp01(event.base_intensity);
    if (!layered_) {
        emotions_[event.kind] = std::max(emotions_[event.kind], base);
        return base;
    }
    EmotionEvent e = event;
    e.base_intensity = base;
    const double i = effective_intensity(mood_, profile, e, params);
    emotions_[e.kind] = std::max(emotions_[e.kind], i);
    pending_.push_back({emotion_basis(e.kind), i});
    return i;
}

void AffectState::accumulate(const AffectParams& params) {
    if (!layered_ || pending_.empty()) {
        pending_.clear();
        return;
    }
    double total = 0.0;
    for (const auto& p : pending_) total += p.intensity;
    if (total > 0.0) mood_ = update_mood(mood_, virtual_emotion_center(pending_).position, params);
    pending_.clear();
}

void AffectState::settle(double dt, const AffectParams& params) {
    auto r = decay(emotions_, mood_, default_mood_, dt, params);
    emotions_ = r.emotions;
    if (layered_) mood_ = r.mood;
}

void AffectState::restore(const EmotionVector& emotions, const MoodState& mood, PadVector default_mood, bool layered,
                          std::vector<WeightedPad> pending) {
    emotions_ = emotions;
    mood_ = mood;
    default_mood_ = default_mood;
    layered_ = layered;
    pending_ = std::move(pending);
}

}  // namespace psya
