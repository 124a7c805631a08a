#include "psya/social.hpp"

#include "support/fakes.hpp"

#include <doctest.h>

using namespace psya;

namespace {

struct Person {
    AgentProfile profile;
    AffectState affect;
    MemoryStore memory;
    std::vector<MemoEntry> memo;

    Person(std::string id, std::string name) {
        profile.id = std::move(id);
        profile.name = std::move(name);
        profile.occupation = "baker";
        affect = AffectState(profile.big_five, true);
    }
    Participant part() { return {profile, affect, memory, memo}; }
};

}  // namespace

TEST_CASE("trigger probability") {
    CHECK(conversation_probability(0.5, 0.5) == doctest::Approx(0.2 + 0.25 + 0.15));
    CHECK(conversation_probability(1.0, 0.0) == doctest::Approx(1.0));
    CHECK(conversation_probability(0.0, 1.0) == doctest::Approx(0.2));
    TriggerParams hot{0.9, 0.5, 0.5};
    CHECK(conversation_probability(1.0, 0.0, hot) == 1.0);
    Rng rng(2);
    for (int i = 0; i < 1000; ++i) {
        const double p = conversation_probability(rng.uniform(), rng.uniform());
        CHECK((p >= 0.0 && p <= 1.0));
    }
}

TEST_CASE("acquaintances draw without asking the backend") {
    auto engine = std::make_shared<testing::FnEngine>([](const BackendRequest&) { return "avoid"; });
    Gateway gw(engine);
    TemplateLibrary t;
    Person a("a", "Ann");
    a.memory.seed_relationship("b", "friend", 1.0);
    NeedsState needs;
    needs[Need::Social] = 0.0;
    EncounterContext ctx{"a", "b", "park", {}, true};
    Rng rng(1);
    const auto d = should_converse(ctx, needs, a.memory.relation("b"), rng, gw, t, a.profile);
    CHECK(!d.judged);
    CHECK(d.probability == doctest::Approx(1.0));
    CHECK(d.converse);
    CHECK(engine->calls == 0);
}

TEST_CASE("strangers are judged first") {
    TemplateLibrary t;
    Person a("a", "Ann");
    NeedsState needs;
    EncounterContext ctx{"a", "z", "park", {"tall, smiling", "feeding ducks"}, false};

    Gateway avoid(std::make_shared<testing::FnEngine>([](const BackendRequest&) { return "avoid"; }));
    Rng r1(1), r1_copy(1);
    const auto d1 = should_converse(ctx, needs, nullptr, r1, avoid, t, a.profile);
    CHECK(d1.judged);
    CHECK(d1.judgment == "avoid");
    CHECK(!d1.converse);
    CHECK(r1.next() == r1_copy.next());  // no draw

    Gateway approach(std::make_shared<testing::FnEngine>([](const BackendRequest& r) {
        CHECK(r.rendered_prompt.find("feeding ducks") != std::string::npos);
        return "I would approach.";
    }));
    Rng r2(1);
    const auto d2 = should_converse(ctx, needs, nullptr, r2, approach, t, a.profile);
    CHECK(d2.judgment == "approach");
    CHECK(d2.probability == doctest::Approx(conversation_probability(0.0, needs[Need::Social])));
}

TEST_CASE("a conversation updates both sides") {
    int turn = 0;
    Gateway gw(std::make_shared<testing::FnEngine>([&](const BackendRequest& r) -> std::string {
        if (r.template_name == "converse_turn") return ++turn == 3 ? "See you at six. [END]" : "Hello there.";
        if (r.template_name == "converse_extract")
            return R"({"summary": "They agreed to meet.", "intimacy_delta": {"initiator": 0.9, "partner": -0.05},
                       "impressions": {"initiator": "warm", "partner": "pushy"},
                       "commitments": [{"text": "meet at the cafe", "time": "18:00", "location": "cafe"},
                                       {"text": "meet at the cafe", "time": "18:00", "location": "cafe"}]})";
        return R"({"emotion": "happiness", "intensity": 0.7})";
    }));
    TemplateLibrary t;
    Clock clock;
    Person a("a", "Ann"), b("b", "Bo");
    const auto rec = converse(a.part(), b.part(), gw, t, clock, 4, "park", {});
    CHECK(!rec.interrupted);
    REQUIRE(rec.turns.size() == 3);
    CHECK(rec.turns[0].speaker == "a");
    CHECK(rec.turns[1].speaker == "b");
    CHECK(rec.turns[2].text == "See you at six.");
    CHECK(rec.summary == "They agreed to meet.");
    CHECK(rec.intimacy_delta[0] == doctest::Approx(0.2));  // capped
    CHECK(rec.intimacy_delta[1] == doctest::Approx(-0.05));
    REQUIRE(rec.commitments.size() == 1);
    CHECK(rec.commitments[0].due == clock.parse("18:00", 0));

    CHECK(a.memory.relation("b")->intimacy == doctest::Approx(0.7));
    CHECK(a.memory.relation("b")->impression == "warm");
    CHECK(b.memory.relation("a")->impression == "pushy");
    REQUIRE(a.memo.size() == 1);
    CHECK(*a.memo[0].commitment_with == "b");
    CHECK(*b.memo[0].commitment_with == "a");
    CHECK(a.affect.emotions()[Emotion::Happiness] >= 0.7 - 1e-9);
    CHECK(a.memory.full().size() == 1);
    CHECK(b.memory.full().back().content.find("They agreed to meet.") != std::string::npos);
}

TEST_CASE("backend failure mid-dialogue closes the conversation") {
    int calls = 0;
    Gateway gw(std::make_shared<testing::FnEngine>([&](const BackendRequest&) -> std::string {
        if (++calls > 2) throw BackendUnavailableError("gone");
        return "Hi.";
    }));
    TemplateLibrary t;
    Clock clock;
    Person a("a", "Ann"), b("b", "Bo");
    const auto rec = converse(a.part(), b.part(), gw, t, clock, 0, "park", {});
    CHECK(rec.interrupted);
    CHECK(rec.backend_unavailable);
    CHECK(rec.summary == "interrupted");
    CHECK(rec.turns.size() == 2);
    CHECK(a.memory.relation("b")->intimacy == doctest::Approx(0.5));
    CHECK(a.memory.relation("b")->interactions.back().summary == "interrupted");
}

TEST_CASE("conversation stops at the turn cap") {
    Gateway gw(std::make_shared<ScriptedEngine>());
    TemplateLibrary t;
    Clock clock;
    Person a("a", "Ann"), b("b", "Bo");
    ConversationSettings s;
    s.max_turns = 5;
    const auto rec = converse(a.part(), b.part(), gw, t, clock, 0, "park", {}, s);
    CHECK(rec.turns.size() == 5);
    const auto j = to_json(rec, clock);
    CHECK(j.at("turns").size() == 5);
}
