#include "psya/backend.hpp"
#include "psya/templates.hpp"

#include "support/fakes.hpp"
#include "support/stub_server.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

using namespace psya;

namespace {

BackendRequest req(std::string tmpl, std::string prompt, ExpectedFormat f = {}) {
    BackendRequest r;
    r.template_name = std::move(tmpl);
    r.rendered_prompt = std::move(prompt);
    r.constraints.format = std::move(f);
    return r;
}

std::filesystem::path temp(const std::string& name) {
    auto p = std::filesystem::temp_directory_path() / ("psya_test_" + name);
    std::filesystem::remove_all(p);
    return p;
}

HttpConfig fast_config(const std::string& url) {
    HttpConfig c;
    c.base_url = url;
    c.attempts = 3;
    c.initial_backoff = std::chrono::milliseconds(1);
    c.timeout = std::chrono::seconds(5);
    return c;
}

}  // namespace

TEST_CASE("choice parsing picks the earliest whole-word option") {
    const auto f = ExpectedFormat::choice({"yes", "no"});
    CHECK(*parse_structured("Yes, of course.", f) == "yes");
    CHECK(*parse_structured("I'd say no. Not yes.", f) == "no");
    CHECK_THROWS_AS(parse_structured("nobody knows", f), FormatError);
    // Longer option wins at the same position.
    const auto g = ExpectedFormat::choice({"call", "call for help"});
    CHECK(*parse_structured("call for help now", g) == "call for help");
    CHECK_THROWS_AS(parse_structured("x", ExpectedFormat::choice({})), ConfigurationError);
}

TEST_CASE("score parsing takes the first n numbers") {
    const auto f = ExpectedFormat::scores(3);
    CHECK(*parse_structured("1 -2.5 +3 4", f) == json::array({1.0, -2.5, 3.0}));
    CHECK_THROWS_AS(parse_structured("1 2", f), FormatError);
}

TEST_CASE("schema parsing checks required keys") {
    const auto f = ExpectedFormat::json_schema("emotion_rating");
    const auto j = parse_structured("Sure: {\"emotion\": \"fear\", \"intensity\": 0.4} done", f);
    CHECK(j->at("emotion") == "fear");
    CHECK_THROWS_AS(parse_structured("{\"emotion\": \"fear\"}", f), FormatError);
    CHECK_THROWS_AS(parse_structured("no json", f), FormatError);
    CHECK_THROWS_AS(format_instruction(ExpectedFormat::json_schema("nope")), ConfigurationError);
    CHECK(!parse_structured("anything", ExpectedFormat::freetext()));
}

TEST_CASE("every schema example parses against itself") {
    for (const char* name : {"day_plan", "reflection", "scenario", "self_reflection", "conversation_summary",
                             "emotion_rating", "action_sequence"}) {
        const auto* s = find_schema(name);
        REQUIRE(s);
        CHECK_NOTHROW(parse_structured(s->example, ExpectedFormat::json_schema(name)));
    }
}

TEST_CASE("hashed embeddings are unit length and deterministic") {
    const auto a = hashed_embedding("The cat sat on the mat");
    const auto b = hashed_embedding("the CAT sat, on the mat!");
    CHECK(a.size() == kHashedEmbeddingDim);
    double n = 0;
    for (double v : a) n += v * v;
    CHECK(std::sqrt(n) == doctest::Approx(1.0));
    CHECK(cosine_similarity(a, b) == doctest::Approx(1.0));
    CHECK(cosine_similarity(a, hashed_embedding("quantum chromodynamics")) < 0.5);
    CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
}

TEST_CASE("token overlap") {
    CHECK(token_overlap("a b c", "a b c") == doctest::Approx(1.0));
    CHECK(token_overlap("a b", "c d") == doctest::Approx(0.0));
    CHECK(token_overlap("a b", "b c") == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("scripted rules match template and pattern in order") {
    const json rules = {{"rules",
                         {{{"template", "t1"}, {"match", "storm"}, {"response", "stay in"}},
                          {{"template", "t1"}, {"response", "go out"}},
                          {{"match", "^Hello"}, {"response", {{"k", 1}}}}}}};
    ScriptedEngine e(ScriptedEngine::rules_from_json(rules));
    CHECK(e.complete(req("t1", "a storm is coming")) == "stay in");
    CHECK(e.complete(req("t1", "sunny")) == "go out");
    CHECK(e.complete(req("t2", "Hello there")) == "{\"k\":1}");
    CHECK(e.complete(req("t2", "bye", ExpectedFormat::choice({"x", "y"}))) == "x");
    CHECK(e.complete(req("t2", "bye", ExpectedFormat::scores(2))) == "0.5 0.5");
    CHECK_THROWS_AS(ScriptedEngine::rules_from_json(json{{"rules", {{{"template", "t"}}}}}), ConfigurationError);
}

TEST_CASE("gateway re-asks once, then gives up") {
    auto bad = std::make_shared<testing::FnEngine>([](const BackendRequest&) { return "maybe"; });
    Gateway g(bad);
    CHECK_THROWS_AS(g.generate(req("t", "p", ExpectedFormat::choice({"yes", "no"}))), FormatError);
    CHECK(bad->calls == 2);

    int n = 0;
    auto second = std::make_shared<testing::FnEngine>([&](const BackendRequest& r) {
        ++n;
        CHECK((n == 1 || r.rendered_prompt.find("could not be used") != std::string::npos));
        return n == 1 ? "maybe" : "no";
    });
    Gateway g2(second);
    CHECK(*g2.generate(req("t", "p", ExpectedFormat::choice({"yes", "no"}))).parsed == "no");
}

TEST_CASE("request digests depend on prompt and constraints") {
    const auto a = req("t", "p");
    auto b = a;
    CHECK(request_digest(a) == request_digest(b));
    b.constraints.seed = 1;
    CHECK(request_digest(a) != request_digest(b));
    CHECK(request_digest(a).size() == 64);
}

TEST_CASE("transcript save, load and collisions") {
    Transcript t;
    t.meta = {"http", "m", ""};
    t.add({"d2", "x", "two"});
    t.add({"d1", "x", "one\nline"});
    t.add({"d1", "x", "one\nline"});  // same binding is fine
    CHECK_THROWS_AS(t.add({"d1", "x", "other"}), BackendError);
    const auto path = temp("transcript.jsonl");
    t.save(path);
    const auto back = Transcript::load(path);
    CHECK(back.size() == 2);
    CHECK(back.find("d1")->response == "one\nline");
    CHECK(back.meta.engine == "http");
    std::filesystem::remove(path);
    CHECK_THROWS(Transcript::load(temp("missing.jsonl")));
}

TEST_CASE("replay serves recorded answers and reports misses") {
    auto rec = std::make_shared<Transcript>();
    Gateway live(std::make_shared<testing::FnEngine>([](const BackendRequest& r) { return "echo " + r.rendered_prompt; }));
    live.record_into(rec);
    const auto first = live.generate(req("t", "alpha")).text;
    live.embed("some text");

    Gateway replay(std::make_shared<ReplayEngine>(rec));
    CHECK(replay.generate(req("t", "alpha")).text == first);
    CHECK(replay.embed("some text") == hashed_embedding("some text"));
    CHECK_THROWS_AS(replay.generate(req("t", "beta")), ReplayMissError);
}

TEST_CASE("http engine speaks chat completions") {
    testing::StubServer server;
    HttpEngine e(fast_config(server.url()));
    CHECK(e.complete(req("t", "Pick.\n\nAnswer with exactly one of the following options: red | blue.")) == "red");
    CHECK(e.complete(req("t", "Rate.\n\nAnswer with exactly 2 number(s), separated by spaces, and nothing else.")) ==
          "0.5 0.5");
    CHECK(e.embed("hello world") == hashed_embedding("hello world"));
    CHECK(server.chat_calls() == 2);
    const auto body = e.chat_body(req("t", "hi"));
    CHECK(body.at("messages").at(0).at("content") == "hi");
    CHECK(body.at("temperature") == 0.0);
}

TEST_CASE("http engine retries then reports the backend unavailable") {
    testing::StubServer server(503);
    HttpEngine e(fast_config(server.url()));
    CHECK_THROWS_AS(e.complete(req("t", "hi")), BackendUnavailableError);
    CHECK(server.chat_calls() == 3);

    HttpConfig nowhere = fast_config("http://127.0.0.1:1");
    nowhere.attempts = 2;
    HttpEngine dead(nowhere);
    CHECK_THROWS_AS(dead.complete(req("t", "hi")), BackendUnavailableError);
}

TEST_CASE("templates render and reject unbound placeholders") {
    TemplateLibrary t;
    t.set("greet", "Hello {{name}}, you are in {{place}}.");
    CHECK(t.render("greet", {{"name", "Ada"}, {"place", "the park"}}) == "Hello Ada, you are in the park.");
    CHECK_THROWS_AS(t.render("greet", {{"name", "Ada"}}), ConfigurationError);
    CHECK_THROWS_AS(t.render("nope", {}), ConfigurationError);
    const auto r = t.request("greet", {{"name", "A"}, {"place", "B"}}, ExpectedFormat::choice({"x", "y"}), 3);
    CHECK(r.rendered_prompt.find("Answer with exactly one of the following options: x | y.") != std::string::npos);
    CHECK(r.constraints.seed == 3);

    for (const auto& [name, text] : builtin_templates()) CHECK(t.has(name));
    const auto dir = temp("templates");
    std::filesystem::create_directories(dir);
    std::ofstream(dir / "greet.txt") << "Hi {{name}}.";
    CHECK(t.load_overrides(dir) == 1);
    CHECK(t.render("greet", {{"name", "Bo"}}) == "Hi Bo.");
    std::filesystem::remove_all(dir);
}
