#include "psya/affect.hpp"
#include "psya/rng.hpp"

#include <doctest.h>

#include <cmath>

using namespace psya;

namespace {

// Mehrabian's trait-to-PAD rows, typed in by hand: (E, A, N, O, C).
constexpr double kP[5] = {0.21, 0.59, 0.19, 0.0, 0.0};
constexpr double kA[5] = {0.0, 0.30, -0.57, 0.15, 0.0};
constexpr double kD[5] = {0.60, -0.32, 0.0, 0.25, 0.17};

PersonalityProfile profile_of(const double t[5]) { return {t[0], t[1], t[2], t[3], t[4]}; }

double clamp1(double v) { return std::min(1.0, std::max(-1.0, v)); }

double dist(PadVector x, PadVector y) { return (x - y).norm(); }

PadVector random_pad(Rng& rng, double lo = -1.0, double hi = 1.0) {
    return {rng.uniform(lo, hi), rng.uniform(lo, hi), rng.uniform(lo, hi)};
}

}  // namespace

TEST_CASE("unit personalities land on the weight columns") {
    for (int i = 0; i < 5; ++i) {
        double t[5] = {0, 0, 0, 0, 0};
        t[i] = 1.0;
        const auto pad = map_personality_to_pad(profile_of(t));
        CHECK(pad.p == doctest::Approx(kP[i]).epsilon(1e-12));
        CHECK(pad.a == doctest::Approx(kA[i]).epsilon(1e-12));
        CHECK(pad.d == doctest::Approx(kD[i]).epsilon(1e-12));
    }
}

TEST_CASE("personality mapping matches hand dot products") {
    Rng rng(11);
    for (int k = 0; k < 100; ++k) {
        double t[5];
        for (double& v : t) v = rng.uniform();
        double p = 0, a = 0, d = 0;
        for (int i = 0; i < 5; ++i) {
            p += kP[i] * t[i];
            a += kA[i] * t[i];
            d += kD[i] * t[i];
        }
        const auto pad = map_personality_to_pad(profile_of(t));
        CHECK(std::abs(pad.p - clamp1(p)) <= 1e-9);
        CHECK(std::abs(pad.a - clamp1(a)) <= 1e-9);
        CHECK(std::abs(pad.d - clamp1(d)) <= 1e-9);
    }
}

TEST_CASE("projection is linear in the traits") {
    Rng rng(3);
    for (int k = 0; k < 50; ++k) {
        PersonalityProfile x{rng.uniform(), rng.uniform(), rng.uniform(), rng.uniform(), rng.uniform()};
        PersonalityProfile y{rng.uniform(), rng.uniform(), rng.uniform(), rng.uniform(), rng.uniform()};
        PersonalityProfile sum{x.extraversion + y.extraversion, x.agreeableness + y.agreeableness,
                               x.neuroticism + y.neuroticism, x.openness + y.openness,
                               x.conscientiousness + y.conscientiousness};
        const auto lhs = project_personality(sum);
        const auto rhs = project_personality(x) + project_personality(y);
        CHECK(dist(lhs, rhs) < 1e-12);
    }
}

TEST_CASE("emotion center is the intensity-weighted mean") {
    Rng rng(5);
    for (int k = 0; k < 200; ++k) {
        const int n = static_cast<int>(rng.uniform_int(1, 12));
        std::vector<WeightedPad> ev;
        long double sp = 0, sa = 0, sd = 0, w = 0;
        for (int i = 0; i < n; ++i) {
            const auto pt = random_pad(rng);
            const double in = rng.uniform(0.01, 1.0);
            ev.push_back({pt, in});
            sp += in * pt.p;
            sa += in * pt.a;
            sd += in * pt.d;
            w += in;
        }
        const auto c = virtual_emotion_center(ev);
        CHECK(std::abs(c.position.p - static_cast<double>(sp / w)) <= 1e-9);
        CHECK(std::abs(c.position.a - static_cast<double>(sa / w)) <= 1e-9);
        CHECK(std::abs(c.position.d - static_cast<double>(sd / w)) <= 1e-9);
        CHECK(c.total_intensity == doctest::Approx(static_cast<double>(w)));
        CHECK(c.mean_intensity == doctest::Approx(static_cast<double>(w) / n));
    }
}

TEST_CASE("emotion center is undefined without mass") {
    CHECK_THROWS_AS(virtual_emotion_center(std::vector<WeightedPad>{}), UndefinedCenterError);
    std::vector<WeightedPad> zero = {{{0.1, 0.2, 0.3}, 0.0}, {{0.4, 0.2, 0.1}, 0.0}};
    CHECK_THROWS_AS(virtual_emotion_center(zero), UndefinedCenterError);
    std::vector<WeightedPad> neg = {{{0.1, 0.2, 0.3}, -1.0}};
    CHECK_THROWS_AS(virtual_emotion_center(neg), UndefinedCenterError);
}

TEST_CASE("mood update worked examples") {
    AffectParams params;
    // From the origin the mood is pulled 30% of the way to the center.
    const auto pulled = update_mood(MoodState::at({0, 0, 0}), {0.4, 0.2, 0.1}, params);
    CHECK(pulled.position.p == doctest::Approx(0.12));
    CHECK(pulled.position.a == doctest::Approx(0.06));
    CHECK(pulled.position.d == doctest::Approx(0.03));
    CHECK(pulled.octant == Octant::Exuberant);

    // Beyond the center along its direction the mood is pushed further out by 10%.
    const auto pushed = update_mood(MoodState::at({0.8, 0.4, 0.2}), {0.4, 0.2, 0.1}, params);
    CHECK(pushed.position.p == doctest::Approx(0.84));
    CHECK(pushed.position.a == doctest::Approx(0.42));
    CHECK(pushed.position.d == doctest::Approx(0.21));

    // Opposite side of the origin: pull.
    const auto back = update_mood(MoodState::at({-0.5, -0.5, -0.5}), {0.5, 0.5, 0.5}, params);
    CHECK(back.position.p == doctest::Approx(-0.2));

    // A center at the origin leaves the mood alone.
    const auto still = update_mood(MoodState::at({0.3, -0.2, 0.1}), {0, 0, 0}, params);
    CHECK(still.position == MoodState::at({0.3, -0.2, 0.1}).position);
}

TEST_CASE("mood update properties") {
    AffectParams params;
    Rng rng(17);
    int pulls = 0, pushes = 0;
    for (int k = 0; k < 20000; ++k) {
        const auto cur = MoodState::at(random_pad(rng));
        const auto c = random_pad(rng);
        const auto next = update_mood(cur, c, params);
        const double proj = cur.position.dot(c) / c.norm();
        REQUIRE(std::abs(next.position.p) <= 1.0);
        REQUIRE(std::abs(next.position.a) <= 1.0);
        REQUIRE(std::abs(next.position.d) <= 1.0);
        if (proj < c.norm()) {
            ++pulls;
            REQUIRE(dist(next.position, c) <= (1.0 - params.pull_rate) * dist(cur.position, c) + 1e-12);
        } else {
            const PadVector raw = cur.position + params.push_rate * (cur.position - c);
            if (raw == raw.clamped()) {
                ++pushes;
                REQUIRE(dist(next.position, c) >= dist(cur.position, c) - 1e-12);
            }
        }
        // The center itself is a fixed point.
        const auto at_c = update_mood(MoodState::at(c), c, params);
        REQUIRE(dist(at_c.position, c) < 1e-12);
    }
    CHECK(pulls > 1000);
    CHECK(pushes > 100);
}

TEST_CASE("decay halves deviations each half-life and composes") {
    AffectParams params;
    EmotionVector e;
    e[Emotion::Fear] = 0.9;
    e[Emotion::Happiness] = 0.1;
    const PadVector def{0.1, 0.0, 0.2};
    const auto mood = MoodState::at({-0.7, 0.5, -0.3});
    const auto r = decay(e, mood, def, params.emotion_half_life, params);
    CHECK(r.emotions[Emotion::Fear] == doctest::Approx(0.7));
    CHECK(r.emotions[Emotion::Happiness] == doctest::Approx(0.3));
    const auto m = decay(e, mood, def, params.mood_half_life, params).mood;
    CHECK(m.position.p == doctest::Approx((-0.7 + 0.1) / 2));

    Rng rng(23);
    for (int k = 0; k < 1000; ++k) {
        EmotionVector x;
        for (Emotion em : kAllEmotions) x[em] = rng.uniform();
        const auto mo = MoodState::at(random_pad(rng));
        const auto dm = random_pad(rng);
        const double s = rng.uniform(0, 50), t = rng.uniform(0, 50);
        const auto two = decay(decay(x, mo, dm, s, params).emotions, decay(x, mo, dm, s, params).mood, dm, t, params);
        const auto one = decay(x, mo, dm, s + t, params);
        for (Emotion em : kAllEmotions) REQUIRE(std::abs(two.emotions[em] - one.emotions[em]) < 1e-12);
        REQUIRE(dist(two.mood.position, one.mood.position) < 1e-12);
    }
    // dt <= 0 is the identity.
    const auto same = decay(e, mood, def, 0.0, params);
    CHECK(same.emotions == e);
}

TEST_CASE("event intensity follows mood alignment and neuroticism") {
    AffectParams params;
    PersonalityProfile calm{0.5, 0.5, 0.0, 0.5, 0.5};
    PersonalityProfile nervous{0.5, 0.5, 1.0, 0.5, 0.5};
    const auto fearful = MoodState::at(emotion_basis(Emotion::Fear));
    EmotionEvent ev{Emotion::Fear, 0.4, 0};
    const double w_calm = params.mood_weight_base;
    const double w_nerv = params.mood_weight_base + params.mood_weight_span;
    CHECK(effective_intensity(fearful, calm, ev, params) == doctest::Approx(0.4 + w_calm * fearful.intensity));
    CHECK(effective_intensity(fearful, nervous, ev, params) == doctest::Approx(0.4 + w_nerv * fearful.intensity));
    // A neutral mood adds nothing.
    CHECK(effective_intensity(MoodState::at({0, 0, 0}), nervous, ev, params) == doctest::Approx(0.4));
    // Opposed mood damps.
    const auto happy = MoodState::at(emotion_basis(Emotion::Happiness));
    CHECK(effective_intensity(happy, nervous, ev, params) < 0.4);
}

TEST_CASE("apply_event keeps the stronger of current and new") {
    AffectParams params;
    PersonalityProfile p;
    EmotionVector e;
    e[Emotion::Anger] = 0.9;
    const auto neutral = MoodState::at({0, 0, 0});
    auto out = apply_event(e, neutral, p, {Emotion::Anger, 0.6, 0}, params);
    CHECK(out[Emotion::Anger] == doctest::Approx(0.9));
    out = apply_event(e, neutral, p, {Emotion::Sadness, 0.7, 0}, params);
    CHECK(out[Emotion::Sadness] == doctest::Approx(0.7));
    CHECK(out[Emotion::Anger] == doctest::Approx(0.9));
}

TEST_CASE("unlayered affect ignores mood and never accumulates") {
    AffectParams params;
    PersonalityProfile p{0.9, 0.9, 0.9, 0.9, 0.9};
    AffectState flat(p, false);
    CHECK(flat.mood().position == PadVector{});
    CHECK(flat.feel({Emotion::Fear, 0.7, 0}, p, params) == doctest::Approx(0.7));
    flat.accumulate(params);
    CHECK(flat.mood().position == PadVector{});
    CHECK(flat.pending().empty());

    AffectState layered(p, true);
    CHECK(layered.mood().position == map_personality_to_pad(p));
    layered.feel({Emotion::Fear, 0.7, 0}, p, params);
    CHECK(layered.pending().size() == 1);
    const auto before = layered.mood().position;
    layered.accumulate(params);
    CHECK(layered.pending().empty());
    CHECK(!(layered.mood().position == before));
}

TEST_CASE("octants by sign") {
    CHECK(classify_octant({1, 1, 1}) == Octant::Exuberant);
    CHECK(classify_octant({1, 1, -1}) == Octant::Dependent);
    CHECK(classify_octant({1, -1, 1}) == Octant::Relaxed);
    CHECK(classify_octant({1, -1, -1}) == Octant::Docile);
    CHECK(classify_octant({-1, 1, 1}) == Octant::Hostile);
    CHECK(classify_octant({-1, 1, -1}) == Octant::Anxious);
    CHECK(classify_octant({-1, -1, 1}) == Octant::Disdainful);
    CHECK(classify_octant({-1, -1, -1}) == Octant::Bored);
    CHECK(classify_octant({0, 0, 0}) == Octant::Exuberant);
}

TEST_CASE("emotion names round-trip") {
    for (Emotion e : kAllEmotions) CHECK(emotion_from_name(to_string(e)) == e);
    CHECK(emotion_from_name("FEAR") == Emotion::Fear);
    CHECK_THROWS_AS(emotion_from_name("boredom"), std::invalid_argument);
    CHECK_THROWS_AS(emotion_basis("boredom"), std::invalid_argument);
}
