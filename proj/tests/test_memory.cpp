#include "psya/memory.hpp"
#include "psya/backend.hpp"
#include "psya/templates.hpp"

#include "support/fakes.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>

using namespace psya;

namespace {

FullMemoryRecord rec(Tick t, std::string loc, std::string content, double importance, double fear = 0.5) {
    FullMemoryRecord r;
    r.tick = t;
    r.location = std::move(loc);
    r.content = std::move(content);
    r.importance = importance;
    r.emotional_response[Emotion::Fear] = fear;
    return r;
}

}  // namespace

TEST_CASE("ids are assigned in order starting at 1") {
    MemoryStore m;
    CHECK(m.record_event(rec(0, "park", "a", 0.5)) == 1);
    CHECK(m.record_event(rec(1, "park", "b", 0.5)) == 2);
    CHECK(m.find(2)->content == "b");
    CHECK(m.find(9) == nullptr);
}

TEST_CASE("retrieval score is the weighted sum") {
    RetrievalWeights w;
    const auto r = rec(0, "park", "x", 0.4);
    // Age of one half-life halves recency.
    CHECK(MemoryStore::score(r, 0.8, 96, w) == doctest::Approx(0.5 * 0.8 + 0.3 * 0.5 + 0.2 * 0.4));
    CHECK(MemoryStore::score(r, 0.0, 0, w) == doctest::Approx(0.3 + 0.2 * 0.4));
}

TEST_CASE("retrieval returns the top-k by score against a brute-force ranking") {
    MemoryStore m;
    Rng rng(8);
    const std::vector<std::string> words = {"coffee", "park", "rain", "book", "friend", "work", "cat", "music"};
    for (int i = 0; i < 60; ++i) {
        std::string content;
        for (int k = 0; k < 4; ++k) content += words[static_cast<std::size_t>(rng.uniform_int(0, 7))] + " ";
        m.record_event(rec(i, "park", content, rng.uniform()));
    }
    const Tick now = 80;
    const std::string query = "coffee with a friend";
    const auto got = m.retrieve(query, 5, now);
    REQUIRE(got.size() == 5);

    std::vector<std::pair<double, const FullMemoryRecord*>> all;
    for (const auto& r : m.full()) all.push_back({MemoryStore::score(r, token_overlap(query, r.content), now, {}), &r});
    std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        if (a.second->tick != b.second->tick) return a.second->tick > b.second->tick;
        return a.second->id > b.second->id;
    });
    for (std::size_t i = 0; i < 5; ++i) CHECK(got[i].id == all[i].second->id);
}

TEST_CASE("custom relevance and ties") {
    MemoryStore m;
    m.record_event(rec(5, "a", "one", 0.5));
    m.record_event(rec(5, "a", "two", 0.5));
    m.record_event(rec(3, "a", "three", 0.5));
    const auto flat = [](std::string_view, std::string_view) { return 0.0; };
    const auto got = m.retrieve("q", 3, 10, {}, flat);
    REQUIRE(got.size() == 3);
    CHECK(got[0].content == "two");  // same score and tick: higher id first
    CHECK(got[1].content == "one");
    CHECK(got[2].content == "three");
    CHECK(m.retrieve("q", 0, 10).empty());
    CHECK(MemoryStore{}.retrieve("q", 3, 10).empty());
}

TEST_CASE("deletion rule keeps important or emotional records") {
    SummaryThresholds t;
    CHECK(!MemoryStore::survives(rec(0, "", "", 0.1), t));
    CHECK(MemoryStore::survives(rec(0, "", "", 0.3), t));
    CHECK(MemoryStore::survives(rec(0, "", "", 0.1, 0.7), t));
    CHECK(!MemoryStore::survives(rec(0, "", "", 0.1, 0.55), t));
}

TEST_CASE("summarization groups by location and moves records out") {
    MemoryStore m;
    m.record_event(rec(1, "cafe", "Met Bob for coffee.", 0.6));
    m.record_event(rec(2, "cafe", "Bob talked about his trip.", 0.5));
    m.record_event(rec(3, "park", "Saw a heron.", 0.4));
    m.record_event(rec(4, "park", "Walked.", 0.1));       // dropped
    m.record_event(rec(20, "home", "Later event.", 0.9));  // outside the period
    Gateway gw(std::make_shared<testing::FnEngine>([](const BackendRequest& r) {
        return r.rendered_prompt.find("cafe") != std::string::npos ? "Coffee with Bob." : "A quiet walk.";
    }));
    TemplateLibrary t;
    Clock clock;
    const auto rep = m.summarize_tier({0, 10}, gw, t, "persona", "Ada", clock);
    CHECK(!rep.deferred);
    REQUIRE(rep.created.size() == 2);
    CHECK(rep.created[0].insight == "Coffee with Bob.");
    CHECK(rep.created[0].provenance == std::vector<RecordId>{1, 2});
    CHECK(rep.created[0].importance == doctest::Approx(0.6));
    CHECK(rep.created[1].provenance == std::vector<RecordId>{3});
    CHECK(rep.deleted == std::vector<RecordId>{4});
    REQUIRE(m.full().size() == 1);
    CHECK(m.full()[0].content == "Later event.");
    CHECK(m.summarized().size() == 2);
}

TEST_CASE("summarization is all-or-nothing on backend failure") {
    MemoryStore m;
    m.record_event(rec(1, "cafe", "Met Bob.", 0.6));
    m.record_event(rec(2, "park", "Walked.", 0.1));
    const auto before = m;
    Gateway gw(std::make_shared<testing::DownEngine>());
    TemplateLibrary t;
    Clock clock;
    const auto rep = m.summarize_tier({0, 10}, gw, t, "persona", "Ada", clock);
    CHECK(rep.deferred);
    CHECK(rep.deleted.empty());
    CHECK(m == before);
}

TEST_CASE("relationships start as strangers and stay in range") {
    MemoryStore m;
    auto r = m.update_relationship("bob", 0.3, "kind", Interaction{1, "cafe", "chatted"});
    CHECK(r.relationship_kind == "stranger");
    CHECK(r.intimacy == doctest::Approx(0.8));
    CHECK(r.impression == "kind");
    r = m.update_relationship("bob", 0.5, "", std::nullopt);
    CHECK(r.intimacy == doctest::Approx(1.0));
    CHECK(r.impression == "kind");
    CHECK(r.interactions.size() == 1);
    r = m.update_relationship("bob", -5.0, "", std::nullopt);
    CHECK(r.intimacy == doctest::Approx(0.0));

    m.seed_relationship("cy", "sibling", 0.9);
    CHECK(m.relation("cy")->relationship_kind == "sibling");
    CHECK(m.relation("cy")->intimacy == doctest::Approx(0.9));
    CHECK(m.relation("cy")->interactions.empty());
    m.set_impression("cy", "reliable");
    CHECK(m.relation("cy")->impression == "reliable");
}

TEST_CASE("save and load round-trip") {
    MemoryStore m;
    auto r = rec(3, "cafe", "Line with \"quotes\", commas\nand newlines.", 0.7, 0.9);
    r.imagined = true;
    m.record_event(r);
    m.record_event(rec(4, "park", "Plain.", 0.2));
    m.add_summary({0, 1, 4, "An insight.", 0.6, {1, 2}});
    m.update_relationship("bob", 0.1, "friendly", Interaction{4, "park", "waved"});
    const auto dir = std::filesystem::temp_directory_path() / "psya_memory_roundtrip";
    std::filesystem::remove_all(dir);
    m.save(dir, "ada");
    const auto back = MemoryStore::load(dir, "ada");
    CHECK(back == m);
    CHECK(back.next_full_id() == 3);
    CHECK(back.next_summary_id() == 2);
    std::filesystem::remove_all(dir);
}

TEST_CASE("records in a period come back in id order") {
    MemoryStore m;
    for (int i = 0; i < 10; ++i) m.record_event(rec(i, "x", std::to_string(i), 0.5));
    const auto got = m.in_period({3, 6});
    REQUIRE(got.size() == 4);
    CHECK(got.front().tick == 3);
    CHECK(got.back().tick == 6);
}
