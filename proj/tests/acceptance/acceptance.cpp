// One PASS/FAIL line per acceptance criterion. Exit status is non-zero when any criterion fails.

#include "psya/affect.hpp"
#include "psya/cognition.hpp"
#include "psya/lab.hpp"
#include "psya/stats.hpp"
#include "psya/world.hpp"

#include "support/stub_server.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <thread>

using namespace psya;
using namespace psya::lab;

namespace {

int failures = 0;

void report(int id, const std::string& name, bool ok, const std::string& detail) {
    std::cout << (ok ? "PASS" : "FAIL") << " [" << id << "] " << name << ": " << detail << std::endl;
    failures += !ok;
}

void skip(int id, const std::string& name, const std::string& why) {
    std::cout << "SKIP [" << id << "] " << name << ": " << why << std::endl;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v) {
    std::ostringstream s;
    s << v;
    return s.str();
}

const std::filesystem::path kData = PSYA_DATA_DIR;

// ---------------------------------------------------------------------------

void affect_projection() {
    const auto t0 = std::chrono::steady_clock::now();
    // Trait rows typed independently of the library constants.
    const double P[5] = {0.21, 0.59, 0.19, 0.0, 0.0};
    const double A[5] = {0.0, 0.30, -0.57, 0.15, 0.0};
    const double D[5] = {0.60, -0.32, 0.0, 0.25, 0.17};
    const auto clamp1 = [](long double v) { return std::clamp(v, -1.0L, 1.0L); };
    Rng rng(101);
    double worst = 0.0;
    int bad_centers = 0;
    for (int k = 0; k < 1000; ++k) {
        PersonalityProfile b{rng.uniform(), rng.uniform(), rng.uniform(), rng.uniform(), rng.uniform()};
        const auto t = b.as_array();
        long double p = 0, a = 0, d = 0;
        for (int i = 0; i < 5; ++i) {
            p += P[i] * t[i];
            a += A[i] * t[i];
            d += D[i] * t[i];
        }
        const auto pad = map_personality_to_pad(b);
        worst = std::max({worst, static_cast<double>(std::abs(pad.p - clamp1(p))),
                          static_cast<double>(std::abs(pad.a - clamp1(a))),
                          static_cast<double>(std::abs(pad.d - clamp1(d)))});

        const int n = 1 + static_cast<int>(rng.uniform_int(0, 9));
        std::vector<WeightedPad> ev;
        long double sp = 0, sa = 0, sd = 0, w = 0;
        for (int i = 0; i < n; ++i) {
            WeightedPad e{{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)}, rng.uniform(0.01, 1.0)};
            ev.push_back(e);
            sp += e.intensity * static_cast<long double>(e.point.p);
            sa += e.intensity * static_cast<long double>(e.point.a);
            sd += e.intensity * static_cast<long double>(e.point.d);
            w += e.intensity;
        }
        const auto c = virtual_emotion_center(ev);
        if (std::abs(c.position.p - sp / w) > 1e-9 || std::abs(c.position.a - sa / w) > 1e-9 ||
            std::abs(c.position.d - sd / w) > 1e-9 || std::abs(c.total_intensity - w) > 1e-9)
            ++bad_centers;
    }
    bool undefined = false;
    try {
        virtual_emotion_center({});
    } catch (const UndefinedCenterError&) {
        undefined = true;
    }
    const double secs = seconds_since(t0);
    report(1, "personality projection and emotion center", worst <= 1e-9 && bad_centers == 0 && undefined && secs < 1.0,
           "max error " + fmt(worst) + " over 1000 profiles, " + std::to_string(bad_centers) +
               " bad centers, empty set undefined=" + (undefined ? "yes" : "no") + ", " + fmt(secs) + " s");
}

void mood_properties() {
    AffectParams params;
    Rng rng(202);
    const auto rnd = [&] { return PadVector{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)}; };
    const auto dist = [](PadVector x, PadVector y) { return (x - y).norm(); };
    long violations = 0, pulls = 0, pushes = 0;
    for (int k = 0; k < 100000; ++k) {
        const auto cur = MoodState::at(rnd());
        const auto c = rnd();
        const auto next = update_mood(cur, c, params).position;
        if (std::abs(next.p) > 1 || std::abs(next.a) > 1 || std::abs(next.d) > 1) ++violations;
        const double proj = cur.position.dot(c) / c.norm();
        if (proj < c.norm()) {
            ++pulls;
            if (dist(next, c) > (1.0 - params.pull_rate) * dist(cur.position, c) + 1e-12) ++violations;
        } else {
            const PadVector raw = cur.position + params.push_rate * (cur.position - c);
            if (raw == raw.clamped()) {
                ++pushes;
                if (dist(next, c) < dist(cur.position, c) - 1e-12) ++violations;
            }
        }
    }
    // Worked example from the origin.
    const auto ex = update_mood(MoodState::at({}), {0.4, 0.2, 0.1}, params).position;
    const bool example = std::abs(ex.p - 0.12) < 1e-12 && std::abs(ex.a - 0.06) < 1e-12 && std::abs(ex.d - 0.03) < 1e-12;
    report(2, "mood pull/push properties", violations == 0 && example && pulls > 0 && pushes > 0,
           std::to_string(violations) + " violations in 100000 cases (" + std::to_string(pulls) + " pulls, " +
               std::to_string(pushes) + " unclamped pushes), origin example " + (example ? "ok" : "wrong"));
}

void decision_policy() {
    PriorityParams params;
    ScheduleEntry e{0, 4, "work", "library", 0.5};
    long mismatches = 0;
    for (int t = 0; t <= 100; ++t)
        for (int n = 0; n <= 100; ++n)
            for (int m = 0; m <= 100; ++m) {
                Priorities p;
                p.task = t / 100.0;
                p.need = n / 100.0;
                p.emotion = m / 100.0;
                const auto c = decide(p, &e, params);
                const double top = std::max({p.task, p.need, p.emotion});
                ActionSource want;
                if (top <= params.threshold) want = ActionSource::Schedule;
                else if (p.need == top) want = ActionSource::Need;
                else if (p.emotion == top) want = ActionSource::Emotion;
                else want = ActionSource::Schedule;
                mismatches += c.source != want;
            }
    NeedCurve f;
    const double gap = std::abs((1.0 - std::exp(f.alpha * (f.beta - 0.5))) - std::exp(f.gamma * (0.5 - f.delta)));
    int rises = 0;
    for (int i = 1; i <= 1000; ++i) rises += f(i / 1000.0) > f((i - 1) / 1000.0);
    const bool anchors =
        std::abs(f(0.5) - 0.5) <= 1e-9 && std::abs(f(0.0) - 0.980) <= 0.001 && std::abs(f(1.0) - 0.020) <= 0.001;
    report(3, "priority decision policy", mismatches == 0 && gap < 1e-9 && rises == 0 && anchors,
           std::to_string(mismatches) + " mismatches on 101^3 grid, branch gap " + fmt(gap) + ", " +
               std::to_string(rises) + " increases, P(0)=" + fmt(f(0.0)) + " P(0.5)=" + fmt(f(0.5)) +
               " P(1)=" + fmt(f(1.0)));
}

void sn_gating() {
    SnConfig pure;
    pure.disturbance_prob = 0.0;
    Rng rng(303);
    int impure = 0;
    const std::vector<std::string> relaxed = {"walk", "walking home", "rest", "resting at home", "idle",
                                              "commute to work", "commuting", "daydream"};
    const std::vector<std::string> task = {"work", "cook dinner", "study", "chat with a friend", "shopping",
                                           "have lunch", "sleeping", "exercise"};
    for (const auto& c : relaxed)
        for (int i = 0; i < 100; ++i) impure += sn_select_mode(c, pure, rng) != ThinkingMode::DMN;
    for (const auto& c : task)
        for (int i = 0; i < 100; ++i) impure += sn_select_mode(c, pure, rng) != ThinkingMode::CEN;
    SnConfig noisy;
    int dmn = 0;
    for (int i = 0; i < 10000; ++i) dmn += sn_select_mode("work", noisy, rng) == ThinkingMode::DMN;
    const double freq = dmn / 10000.0;
    report(4, "salience network gating", impure == 0 && std::abs(freq - 0.10) <= 0.03,
           std::to_string(impure) + " misrouted contexts at eps=0, DMN frequency " + fmt(freq) + " at eps=0.1");
}

void dmn_selection() {
    DmnSelector cyc;
    std::array<int, 3> seen{};
    bool order = true;
    for (int i = 0; i < 300; ++i) {
        const auto f = *dmn_select(cyc, "", "", nullptr);
        ++seen[static_cast<std::size_t>(f)];
        order &= static_cast<int>(f) == i % 3;
    }
    DmnSelector sim;
    sim.strategy = DmnStrategy::Similarity;
    Rng rng(404);
    const std::vector<std::string> words = {"tomorrow", "friend", "plan", "work", "meeting", "sky",
                                            "drift",    "memory", "self", "others", "future", "cloud"};
    int wrong = 0;
    for (int k = 0; k < 100; ++k) {
        std::string digest;
        for (int w = 0; w < 6; ++w) digest += words[rng.uniform_int(0, words.size() - 1)] + " ";
        const auto m = hashed_embedding(digest);
        std::size_t best = 0;
        double top = -2;
        for (std::size_t i = 0; i < 3; ++i) {
            const auto f = hashed_embedding(describe(kAllDmnFunctions[i]));
            double dot = 0, na = 0, nb = 0;
            for (std::size_t j = 0; j < m.size(); ++j) {
                dot += m[j] * f[j];
                na += m[j] * m[j];
                nb += f[j] * f[j];
            }
            const double cs = (na == 0 || nb == 0) ? 0.0 : dot / std::sqrt(na * nb);
            if (cs > top) top = cs, best = i;
        }
        wrong += *dmn_select(sim, digest, "", nullptr) != kAllDmnFunctions[best];
    }
    report(5, "default mode network selection", seen == std::array<int, 3>{100, 100, 100} && order && wrong == 0,
           "cyclic counts " + std::to_string(seen[0]) + "/" + std::to_string(seen[1]) + "/" + std::to_string(seen[2]) +
               (order ? " in order" : " out of order") + ", similarity disagreements " + std::to_string(wrong) +
               "/100");
}

std::uint64_t choose(std::int64_t n, std::int64_t k) {
    if (k < 0 || k > n) return 0;
    std::uint64_t r = 1;
    for (std::int64_t i = 1; i <= k; ++i) r = r * static_cast<std::uint64_t>(n - k + i) / static_cast<std::uint64_t>(i);
    return r;
}

void stats_tests() {
    long bad = 0, checked = 0;
    for (int a = 0; a <= 12; ++a)
        for (int b = 0; a + b <= 12; ++b)
            for (int c = 0; a + c <= 12; ++c)
                for (int d = 0; c + d <= 12 && b + d <= 12; ++d) {
                    const stats::Table2x2 t{{{{a, b}, {c, d}}}};
                    if (t.has_zero_margin()) continue;
                    const std::int64_t r0 = a + b, r1 = c + d, c0 = a + c;
                    const auto num = [&](std::int64_t x) { return choose(r0, x) * choose(r1, c0 - x); };
                    std::uint64_t sum = 0;
                    for (std::int64_t x = 0; x <= std::min(r0, c0); ++x)
                        if (num(x) <= num(a)) sum += num(x);
                    const double fisher = static_cast<double>(sum) / static_cast<double>(choose(r0 + r1, c0));
                    const long double n = a + b + c + d;
                    const auto chi = stats::chi_square_2x2(t);
                    long double diff = std::abs(static_cast<long double>(a) * d - static_cast<long double>(b) * c);
                    if (chi.yates) diff = std::max(0.0L, diff - n / 2);
                    const double x2 = static_cast<double>(n * diff * diff /
                                                          (static_cast<long double>(r0) * r1 * c0 * (b + d)));
                    bad += std::abs(stats::fisher_exact_2x2(t).p - fisher) > 1e-9;
                    bad += std::abs(chi.statistic - x2) > 1e-9 * std::max(1.0, x2);
                    bad += std::abs(chi.p - std::erfc(std::sqrt(x2 / 2))) > 1e-9;
                    ++checked;
                }
    const auto classic = stats::chi_square_2x2({{{{19, 17}, {8, 28}}}});
    const bool ok = bad == 0 && std::abs(classic.statistic - 7.17) <= 0.01 && classic.p < 0.01;
    report(6, "significance tests", ok,
           std::to_string(bad) + " disagreements over " + std::to_string(checked) +
               " tables, classic chi2=" + fmt(classic.statistic) + " p=" + fmt(classic.p));
}

// ---------------------------------------------------------------------------

ExperimentProtocol protocol(const std::string& name, Variant v = Variant::Base) {
    return ExperimentProtocol::load(protocol_path(kData / "protocols", name, v));
}

std::shared_ptr<TextEngine> script(const std::string& file) {
    std::ifstream in(kData / "scripts" / file);
    return std::make_shared<ScriptedEngine>(ScriptedEngine::rules_from_json(json::parse(in)));
}

unsigned jobs() { return std::max(1u, std::thread::hardware_concurrency()); }

ExperimentRun run(const ExperimentProtocol& p, std::shared_ptr<TextEngine> engine, unsigned j = jobs()) {
    Gateway gw(std::move(engine));
    TemplateLibrary t;
    return run_experiment(p, gw, t, {j});
}

double value(const ExperimentRun& r, const std::string& c, const std::string& m) {
    const auto* row = r.table.find(c, m);
    return row ? row->value : std::nan("");
}

void harness_mechanics() {
    std::vector<std::string> broken;
    const auto expect = [&](bool ok, const std::string& what) {
        if (!ok) broken.push_back(what);
    };
    const auto act = run(protocol("helplessness"), script("always_act.json"));
    const auto idle = run(protocol("helplessness"), script("never_act.json"));
    for (const char* g : {"E", "NE", "NP"}) {
        expect(value(act, g, "failure_rate") == 0.0, std::string("act failure ") + g);
        expect(value(idle, g, "failure_rate") == 1.0, std::string("idle failure ") + g);
    }
    for (const auto& t : act.trials)
        if (t.value("phase", "") == "pretreatment" && t.at("group") == "NE")
            expect(!t.at("stopped").get<bool>(), "NE press stopped noise");

    const auto ost = run(protocol("ostracism"), std::make_shared<ScriptedEngine>());
    expect(value(ost, "Ostracism", "balls_received") == 2.0, "ostracism receives");
    expect(value(ost, "Inclusion", "balls_received") == 4.0, "inclusion receives");

    const auto diff = run(protocol("diffusion"), script("help_first.json"));
    for (const char* g : {"2", "3", "6"}) {
        expect(value(diff, g, "helped") == 1.0, std::string("helped ") + g);
        expect(value(diff, g, "help_position") == 1.0, std::string("position ") + g);
    }
    const auto no = run(protocol("fitd"), script("always_no.json"));
    for (const char* g : {"Performance", "Agree-Only", "Familiarization", "One-Contact"})
        expect(value(no, g, "compliance") == 0.0, std::string("compliance ") + g);

    const auto diss = run(protocol("dissonance"), script("constant_ratings.json"));
    expect(value(diss, "Control", "Q2") == 3.0 && value(diss, "Twenty Dollars", "Q1") == 0.0, "constant ratings");

    std::string detail = "all forced outcomes exact";
    if (!broken.empty()) {
        detail = std::to_string(broken.size()) + " broken:";
        for (const auto& b : broken) detail += " " + b + ";";
    }
    report(7, "experiment harness mechanics", broken.empty(), detail);
}

std::string fingerprint(const ExperimentRun& r) {
    std::string s = r.table.long_csv() + r.table.wide_csv() + r.table.significance_csv();
    for (const auto& t : r.trials) s += t.dump() + "\n";
    return s;
}

void determinism() {
    std::vector<std::string> differ;
    for (auto name : kExperimentNames)
        for (Variant v : {Variant::Base, Variant::Extended}) {
            const auto p = protocol(std::string(name), v);
            const auto a = run(p, std::make_shared<ScriptedEngine>());
            const auto b = run(p, std::make_shared<ScriptedEngine>(), 1);
            if (fingerprint(a) != fingerprint(b)) differ.emplace_back(std::string(name) + "_" + std::string(to_string(v)));
        }

    // Record through the HTTP path, then replay from the transcript.
    testing::StubServer server;
    HttpConfig cfg;
    cfg.base_url = server.url();
    cfg.initial_backoff = std::chrono::milliseconds(1);
    auto p = protocol("fitd");
    p.repetitions = 2;
    auto transcript = std::make_shared<Transcript>();
    TemplateLibrary t;
    Gateway live(std::make_shared<HttpEngine>(cfg));
    live.record_into(transcript);
    const auto recorded = run_experiment(p, live, t, {jobs()});
    Gateway replay(std::make_shared<ReplayEngine>(transcript));
    bool replay_ok = true;
    std::string why;
    try {
        replay_ok = fingerprint(run_experiment(p, replay, t, {jobs()})) == fingerprint(recorded);
    } catch (const std::exception& e) {
        replay_ok = false;
        why = std::string(" (") + e.what() + ")";
    }
    std::string detail = std::to_string(2 * kExperimentNames.size() - differ.size()) + "/" +
                         std::to_string(2 * kExperimentNames.size()) + " protocols identical across runs and job counts";
    for (const auto& d : differ) detail += ", differs: " + d;
    detail += "; replay of " + std::to_string(transcript->size()) + " recorded calls " +
              (replay_ok ? "identical" : "differs") + why;
    report(8, "determinism and replay", differ.empty() && replay_ok, detail);
}

void daily_smoke() {
    const auto t0 = std::chrono::steady_clock::now();
    Gateway gw(std::make_shared<ScriptedEngine>());
    TemplateLibrary t;
    const auto config = generate_town(7);
    World w(config, gw, t);
    w.run(72);
    bool bounds = true;
    for (const auto& a : w.agents()) {
        bounds &= a.needs.in_bounds() && a.affect.emotions().in_bounds();
        const auto& m = a.affect.mood().position;
        bounds &= std::abs(m.p) <= 1 && std::abs(m.a) <= 1 && std::abs(m.d) <= 1;
        for (const auto& [id, r] : a.memory.relations()) bounds &= r.intimacy >= 0 && r.intimacy <= 1;
    }
    std::map<std::string, std::set<std::string>> kinds;
    for (const auto& line : w.log()) {
        const auto j = json::parse(line);
        kinds[j.at("agent").get<std::string>()].insert(j.at("kind").get<std::string>());
    }
    int complete = 0;
    for (const auto& a : w.agents()) {
        const auto& k = kinds[a.profile.id];
        complete += k.count("plan") && k.count("dmn") && k.count("reflection");
    }
    const double secs = seconds_since(t0);
    const int n = static_cast<int>(w.agents().size());
    report(9, "daily-life smoke run", n == 8 && w.now() == 72 && bounds && complete == n && secs < 60.0,
           std::to_string(n) + " agents, " + std::to_string(w.now()) + " ticks, bounds " + (bounds ? "hold" : "broken") +
               ", " + std::to_string(complete) + " agents with plan+dmn+reflection, " + fmt(secs) + " s");
}

void live_backend() {
    const char* url = std::getenv("PSYA_LIVE_URL");
    if (!url || !*url) {
        skip(10, "live backend run", "PSYA_LIVE_URL not set");
        return;
    }
    HttpConfig cfg;
    cfg.base_url = url;
    if (const char* m = std::getenv("PSYA_LIVE_MODEL")) cfg.model = m;
    try {
        auto p = protocol("fitd");
        p.repetitions = 1;
        Gateway gw(std::make_shared<HttpEngine>(cfg));
        TemplateLibrary t;
        const auto r = run_experiment(p, gw, t, {4});
        int rows = 0;
        for (const char* g : {"Performance", "Agree-Only", "Familiarization", "One-Contact"}) {
            const double v = value(r, g, "compliance");
            rows += v >= 0.0 && v <= 1.0;
        }
        report(10, "live backend run", rows == 4 && r.table.valid(), std::to_string(rows) + "/4 condition rows valid");
    } catch (const std::exception& e) {
        report(10, "live backend run", false, e.what());
    }
}

}  // namespace

int main() {
    affect_projection();
    mood_properties();
    decision_policy();
    sn_gating();
    dmn_selection();
    stats_tests();
    harness_mechanics();
    determinism();
    daily_smoke();
    live_backend();
    return failures == 0 ? 0 : 1;
}
