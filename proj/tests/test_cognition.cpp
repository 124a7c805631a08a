#include "psya/cognition.hpp"

#include "support/fakes.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace psya;

namespace {

struct Mind {
    AgentProfile profile;
    AffectState affect;
    MemoryStore memory;
    Gateway gateway;
    TemplateLibrary templates;
    Clock clock;

    explicit Mind(std::shared_ptr<TextEngine> engine) : gateway(std::move(engine)) {
        profile.id = "ada";
        profile.name = "Ada";
        profile.occupation = "librarian";
        profile.home = "ada's home";
        profile.workplace = "library";
        affect = AffectState(profile.big_five, true);
    }
    MindContext ctx(Tick now = 0) {
        return MindContext{profile, affect, memory, gateway, templates, clock, now, "library"};
    }
};

}  // namespace

TEST_CASE("need curve anchors") {
    NeedCurve c;
    CHECK(c(0.5) == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(std::abs(c(0.0) - 0.980) <= 0.001);
    CHECK(std::abs(c(1.0) - 0.020) <= 0.001);
    // Left and right branches meet at 0.5.
    const double left = 1.0 - std::exp(c.alpha * (c.beta - 0.5));
    const double right = std::exp(c.gamma * (0.5 - c.delta));
    CHECK(std::abs(left - right) < 1e-9);
    // Out-of-range levels are clamped.
    CHECK(c(-1.0) == c(0.0));
    CHECK(c(2.0) == c(1.0));
}

TEST_CASE("need curve is non-increasing") {
    NeedCurve c;
    for (int i = 1; i <= 1000; ++i) CHECK(c(i / 1000.0) <= c((i - 1) / 1000.0));
}

TEST_CASE("decide follows the schedule at or below the threshold") {
    PriorityParams params;
    ScheduleEntry e{0, 4, "work", "library", 0.5};
    for (int t = 0; t <= 20; ++t)
        for (int n = 0; n <= 20; ++n)
            for (int m = 0; m <= 20; ++m) {
                Priorities p;
                p.task = t / 20.0;
                p.need = n / 20.0;
                p.emotion = m / 20.0;
                const auto c = decide(p, &e, params);
                const bool schedule = std::max({p.task, p.need, p.emotion}) <= params.threshold;
                if (schedule || (p.task > p.need && p.task > p.emotion)) {
                    REQUIRE(c.source == ActionSource::Schedule);
                    REQUIRE(c.activity == "work");
                } else {
                    REQUIRE(c.source != ActionSource::Schedule);
                }
            }
}

TEST_CASE("ties go need, then emotion, then task") {
    PriorityParams params;
    Priorities p;
    p.task = p.need = p.emotion = 0.9;
    p.min_need = Need::Energy;
    CHECK(decide(p, nullptr, params).source == ActionSource::Need);
    CHECK(*decide(p, nullptr, params).need == Need::Energy);
    p.need = 0.1;
    p.max_negative = Emotion::Fear;
    CHECK(decide(p, nullptr, params).source == ActionSource::Emotion);
    CHECK(*decide(p, nullptr, params).emotion == Emotion::Fear);
    p.emotion = 0.1;
    const auto c = decide(p, nullptr, params);
    CHECK(c.source == ActionSource::Schedule);
    CHECK(c.activity == "idle");
}

TEST_CASE("priorities read the lowest need and the strongest negative emotion") {
    PriorityParams params;
    NeedsState needs;
    needs[Need::Social] = 0.1;
    EmotionVector em;
    em[Emotion::Anger] = 0.8;
    em[Emotion::Happiness] = 0.99;  // not negative
    ScheduleEntry e{10, 20, "work", "library", 0.8};
    const auto p = compute_priorities(&e, needs, em, params, 12);
    CHECK(p.min_need == Need::Social);
    CHECK(p.need == doctest::Approx(params.need_curve(0.1)));
    CHECK(p.max_negative == Emotion::Anger);
    CHECK(p.emotion == doctest::Approx(params.emotion_curve(0.2)));
    const double urgency = 1.0 - 8.0 / params.day_length_ticks;
    CHECK(p.task == doctest::Approx(0.5 * 0.8 + 0.5 * urgency));
    CHECK(compute_priorities(nullptr, needs, em, params, 12).task == 0.0);
}

TEST_CASE("relaxed contexts always wander; task contexts draw") {
    SnConfig cfg;
    cfg.disturbance_prob = 0.0;
    Rng rng(1);
    for (const char* ctx : {"walk", "walking in the park", "rest at home", "idle", "commute to work", "commuting", "daydream"})
        CHECK(sn_select_mode(ctx, cfg, rng) == ThinkingMode::DMN);
    for (const char* ctx : {"work", "cook dinner", "study for exam", "chat"})
        for (int i = 0; i < 50; ++i) CHECK(sn_select_mode(ctx, cfg, rng) == ThinkingMode::CEN);

    cfg.disturbance_prob = 0.1;
    Rng r2(42);
    int dmn = 0;
    for (int i = 0; i < 10000; ++i) dmn += sn_select_mode("work", cfg, r2) == ThinkingMode::DMN;
    CHECK(std::abs(dmn / 10000.0 - 0.1) <= 0.03);
}

TEST_CASE("relaxed contexts do not consume randomness") {
    SnConfig cfg;
    Rng a(9), b(9);
    sn_select_mode("rest", cfg, a);
    CHECK(a.next() == b.next());
}

TEST_CASE("cyclic DMN selection visits functions in turn") {
    DmnSelector sel;
    std::array<int, 3> seen{};
    for (int i = 0; i < 300; ++i) ++seen[static_cast<std::size_t>(*dmn_select(sel, "", "", nullptr))];
    CHECK(seen == std::array<int, 3>{100, 100, 100});

    sel.enabled = {false, true, false};
    for (int i = 0; i < 5; ++i) CHECK(*dmn_select(sel, "", "", nullptr) == DmnFunction::SelfSocialCognition);
    sel.enabled = {false, false, false};
    CHECK(!dmn_select(sel, "", "", nullptr));
}

TEST_CASE("similarity DMN selection picks the closest description") {
    DmnSelector sel;
    sel.strategy = DmnStrategy::Similarity;
    CHECK(*dmn_select(sel, std::string(describe(DmnFunction::MindWandering)), "", nullptr) ==
          DmnFunction::MindWandering);
    CHECK(*dmn_select(sel, std::string(describe(DmnFunction::ScenarioSimulation)), "", nullptr) ==
          DmnFunction::ScenarioSimulation);
    sel.enabled = {true, false, true};
    CHECK(*dmn_select(sel, std::string(describe(DmnFunction::SelfSocialCognition)), "", nullptr) !=
          DmnFunction::SelfSocialCognition);
}

TEST_CASE("priority DMN selection uses the model's scores and falls back to cyclic") {
    Mind m(std::make_shared<testing::FnEngine>([](const BackendRequest&) { return "0.1 0.2 0.9"; }));
    auto ctx = m.ctx();
    DmnSelector sel;
    sel.strategy = DmnStrategy::Priority;
    CHECK(*dmn_select(sel, "", "finish the novel", &ctx) == DmnFunction::MindWandering);

    Mind down(std::make_shared<testing::DownEngine>());
    auto dctx = down.ctx();
    DmnSelector s2;
    s2.strategy = DmnStrategy::Priority;
    CHECK(*dmn_select(s2, "", "", &dctx) == DmnFunction::ScenarioSimulation);
    CHECK(*dmn_select(s2, "", "", &dctx) == DmnFunction::SelfSocialCognition);
}

TEST_CASE("strategy names") {
    for (auto s : {DmnStrategy::Cyclic, DmnStrategy::Similarity, DmnStrategy::Priority})
        CHECK(dmn_strategy_from_name(to_string(s)) == s);
}

TEST_CASE("plan_day builds a schedule from the plan schema") {
    Mind m(std::make_shared<ScriptedEngine>());
    PlanInput in;
    in.locations = {"library", "cafe", "park", "restaurant", "central square", "ada's home"};
    const auto r = plan_day(m.ctx(), in);
    CHECK(!r.fallback);
    REQUIRE(!r.schedule.empty());
    for (std::size_t i = 1; i < r.schedule.size(); ++i) CHECK(r.schedule[i - 1].end <= r.schedule[i].start);
    const auto* work = entry_at(r.schedule, m.clock.parse("08:00", 0).value());
    REQUIRE(work);
    CHECK(work->activity == "work");
    CHECK(work->location == "library");
    CHECK(r.schedule.back().end == m.clock.day_start(1));
}

TEST_CASE("plan_day falls back to yesterday's plan when the backend is down") {
    Mind m(std::make_shared<testing::DownEngine>());
    PlanInput in;
    in.day = 1;
    in.from = m.clock.day_start(1);
    in.previous = {{4, 10, "write", "ada's home", 0.6}};
    const auto r = plan_day(m.ctx(), in);
    CHECK(r.fallback);
    const auto it = std::find_if(r.schedule.begin(), r.schedule.end(),
                                 [](const ScheduleEntry& e) { return e.activity == "write"; });
    REQUIRE(it != r.schedule.end());
    CHECK(it->start == m.clock.day_start(1) + 4);
    CHECK(it->end == m.clock.day_start(1) + 10);
    // Gaps around it are filled, nothing overlaps.
    for (std::size_t i = 1; i < r.schedule.size(); ++i) CHECK(r.schedule[i].start == r.schedule[i - 1].end);
}

TEST_CASE("location names resolve onto the town") {
    AgentProfile p;
    p.home = "ada's home";
    p.workplace = "library";
    const std::vector<std::string> locs = {"library", "cafe", "Central Square"};
    CHECK(resolve_location("home", p, locs) == "ada's home");
    CHECK(resolve_location("Workplace", p, locs) == "library");
    CHECK(resolve_location("central square", p, locs) == "Central Square");
    CHECK(resolve_location("café", p, locs) == "cafe");
    CHECK(resolve_location("the moon", p, locs) == "ada's home");
}

TEST_CASE("scenario simulation stores an imagined record and an emotion") {
    Mind m(std::make_shared<ScriptedEngine>());
    m.memory.record_event({0, 0, "library", "Shelved new books about astronomy.", 0.6, {}, false, false});
    Rng rng(4);
    const auto art = run_dmn_function(DmnFunction::ScenarioSimulation, m.ctx(3), {}, rng);
    CHECK(art.ok);
    REQUIRE(art.events.size() == 1);
    CHECK(art.events[0].kind == Emotion::Happiness);
    CHECK(art.events[0].base_intensity == doctest::Approx(0.55));
    REQUIRE(!art.records.empty());
    CHECK(m.memory.find(art.records[0])->imagined);
}

TEST_CASE("DMN failures leave memory alone") {
    Mind m(std::make_shared<testing::DownEngine>());
    m.memory.record_event({0, 0, "library", "Shelved books.", 0.6, {}, false, false});
    Rng rng(4);
    for (DmnFunction f : kAllDmnFunctions) {
        const auto art = run_dmn_function(f, m.ctx(3), {}, rng);
        CHECK(!art.ok);
        CHECK(!art.error.empty());
        CHECK(m.memory.full().size() == 1);
    }
}

TEST_CASE("choose_activity fills in the activity for a need") {
    Mind m(std::make_shared<testing::FnEngine>([](const BackendRequest&) { return "have a sandwich"; }));
    ActionChoice c;
    c.source = ActionSource::Need;
    c.need = Need::Fullness;
    c.level = 0.05;
    choose_activity(c, m.ctx(), nullptr, "");
    CHECK(c.activity.find("sandwich") != std::string::npos);
}
