#include "psya/lab.hpp"

#include <string>

namespace psya::lab {

namespace {

const std::vector<std::string> kPressOptions = {"press the button", "wait"};
const std::vector<std::string> kKnobOptions = {"turn the knob", "wait"};

enum class Response { Avoidance, Escape, Failure };

std::string_view to_string(Response r) {
    switch (r) {
        case Response::Avoidance: return "avoidance";
        case Response::Escape: return "escape";
        case Response::Failure: return "failure";
    }
    return "failure";
}

struct Participant {
    Subject subject;
    std::string locus;        // internal | external
    std::string instruction;  // skill | chance
    std::string pretreatment;  // escapable | inescapable | none
    int partner = -1;         // extended: index of the paired agent
    int presses = 0;
    int stops = 0;
    std::vector<Response> test;
};

struct Texts {
    std::string internal, external, skill, chance;
};

Texts texts_from(const ExperimentProtocol& p) {
    return {p.param<std::string>("internal_belief",
                                 "Believes that what happens to them depends mostly on their own effort and actions."),
            p.param<std::string>("external_belief",
                                 "Believes that what happens to them depends mostly on luck and forces beyond their "
                                 "control."),
            p.param<std::string>("skill_instruction",
                                 "The experimenter explains that stopping the noise depends on the participant's skill."),
            p.param<std::string>("chance_instruction",
                                 "The experimenter explains that whether the noise stops is purely a matter of chance.")};
}

/// Trial index (1-based) that completes the first run of three consecutive
/// responses of `kind`; trials + 1 when there is none.
int trials_to_criterion(const std::vector<Response>& seq, Response kind) {
    int run = 0;
    for (std::size_t i = 0; i < seq.size(); ++i) {
        run = seq[i] == kind ? run + 1 : 0;
        if (run == 3) return static_cast<int>(i) + 1;
    }
    return static_cast<int>(seq.size()) + 1;
}

std::string instruction_text(const Participant& p, const Texts& t) {
    return p.instruction == "skill" ? t.skill : t.chance;
}

void pretreatment(Session& session, std::vector<Participant>& people, const Texts& texts, int trials,
                  int daydream_every) {
    for (int t = 1; t <= trials; ++t) {
        // Decisions first, so a partner's outcome is known when memories are written.
        std::vector<std::string> actions(people.size());
        for (std::size_t i = 0; i < people.size(); ++i) {
            auto& p = people[i];
            if (p.pretreatment == "none") continue;
            auto vars = session.vars(p.subject, "red button noise");
            vars["instruction"] = instruction_text(p, texts);
            vars["trial"] = std::to_string(t);
            vars["trials"] = std::to_string(trials);
            actions[i] = session.choose(p.subject, "helplessness_pretreatment", vars, kPressOptions);
        }
        for (std::size_t i = 0; i < people.size(); ++i) {
            auto& p = people[i];
            if (p.pretreatment == "none") continue;
            const bool pressed = actions[i] == kPressOptions[0];
            // The button works only for escapable agents; nothing else can stop the noise.
            const bool stopped = pressed && p.pretreatment == "escapable";
            if (pressed) ++p.presses;
            if (stopped) ++p.stops;
            std::string memory = "Noise " + std::to_string(t) + ": ";
            if (stopped) {
                session.feel(p.subject, "noise", 0.5);
                session.feel(p.subject, "relief");
                memory += "pressed the red button and the noise stopped.";
            } else if (pressed) {
                session.feel(p.subject, "noise");
                memory += "pressed the red button but the noise kept playing.";
            } else {
                session.feel(p.subject, "noise");
                memory += "waited and the noise played until it ended.";
            }
            if (p.partner >= 0 && pressed) {
                const auto& other = people[static_cast<std::size_t>(p.partner)];
                const bool other_stopped =
                    actions[static_cast<std::size_t>(p.partner)] == kPressOptions[0] && other.pretreatment == "escapable";
                if (other_stopped && !stopped)
                    memory += " " + other.subject.profile.name + " pressed the same button and their noise stopped.";
            }
            session.remember(p.subject, memory, stopped ? 0.4 : 0.6);
            session.log(p.subject, {{"kind", "trial"},
                                    {"phase", "pretreatment"},
                                    {"trial", t},
                                    {"action", actions[i].empty() ? "unparsed" : actions[i]},
                                    {"pressed", pressed},
                                    {"stopped", stopped}});
        }
        for (auto& p : people) session.advance(p.subject, 1);
        session.tick(1);
        if (daydream_every > 0 && t % daydream_every == 0)
            for (auto& p : people)
                if (p.pretreatment != "none") session.daydream(p.subject);
    }
}

void test_phase(Session& session, std::vector<Participant>& people, const Texts& texts, int trials,
                int daydream_every) {
    for (auto& p : people) session.daydream(p.subject);
    for (int t = 1; t <= trials; ++t) {
        for (auto& p : people) {
            auto vars = session.vars(p.subject, "red light knob noise");
            vars["instruction"] = instruction_text(p, texts);
            vars["trial"] = std::to_string(t);
            vars["trials"] = std::to_string(trials);
            const auto at_light = session.choose(p.subject, "helplessness_light", vars, kKnobOptions);
            Response r;
            std::string second;
            std::string memory = "Round " + std::to_string(t) + ": ";
            if (at_light == kKnobOptions[0]) {
                r = Response::Avoidance;
                session.feel(p.subject, "relief");
                memory += "turned the knob when the red light came on and no noise followed.";
            } else {
                session.feel(p.subject, "noise", 0.5);
                auto during = session.vars(p.subject, "loud noise knob");
                during["instruction"] = vars["instruction"];
                during["trial"] = vars["trial"];
                during["trials"] = vars["trials"];
                second = session.choose(p.subject, "helplessness_noise", during, kKnobOptions);
                if (second == kKnobOptions[0]) {
                    r = Response::Escape;
                    session.feel(p.subject, "relief", 0.5);
                    memory += "turned the knob during the noise and it stopped.";
                } else {
                    r = Response::Failure;
                    session.feel(p.subject, "noise");
                    memory += "did nothing and the noise played until it ended.";
                }
            }
            p.test.push_back(r);
            session.remember(p.subject, memory, r == Response::Failure ? 0.6 : 0.4);
            json rec = {{"kind", "trial"},
                        {"phase", "test"},
                        {"trial", t},
                        {"at_light", at_light.empty() ? "unparsed" : at_light},
                        {"response", std::string(to_string(r))}};
            if (r != Response::Avoidance) rec["during_noise"] = second.empty() ? "unparsed" : second;
            session.log(p.subject, std::move(rec));
        }
        for (auto& p : people) session.advance(p.subject, 1);
        session.tick(1);
        if (daydream_every > 0 && t % daydream_every == 0)
            for (auto& p : people) session.daydream(p.subject);
    }
}

Observation proportion(std::string condition, std::string metric, std::int64_t k, std::int64_t n) {
    return {std::move(condition), std::move(metric), n ? static_cast<double>(k) / static_cast<double>(n) : 0.0, k, n};
}

RepetitionOutcome run_once(Session& session) {
    const auto& protocol = session.protocol();
    const bool extended = protocol.variant == Variant::Extended;
    const Texts texts = texts_from(protocol);
    const int pre_trials = protocol.param("pretreatment_trials", 10);
    const int test_trials = protocol.param("test_trials", 18);
    const int every = protocol.param("daydream_every", 6);

    PersonaSpec base;
    base.occupation = protocol.param<std::string>("occupation", "undergraduate student in an introductory psychology course");
    base.min_age = 18;
    base.max_age = 24;
    auto subjects = session.make_subjects(base);

    std::vector<Participant> people;
    std::map<std::string, int> seen;
    for (auto& s : subjects) {
        Participant p;
        const int k = seen[s.group]++;
        p.locus = s.condition.value("locus", k % 2 == 0 ? "internal" : "external");
        p.instruction = s.condition.value("instruction", (k / 2) % 2 == 0 ? "skill" : "chance");
        p.pretreatment = s.condition.value("pretreatment", "none");
        s.profile.beliefs.push_back(p.locus == "internal" ? texts.internal : texts.external);
        p.subject = std::move(s);
        people.push_back(std::move(p));
    }
    if (extended) {
        // i-th controller shares the room with the i-th yoked agent.
        std::vector<int> controllers, yoked;
        for (std::size_t i = 0; i < people.size(); ++i)
            (people[i].pretreatment == "escapable" ? controllers : yoked).push_back(static_cast<int>(i));
        if (controllers.size() != yoked.size())
            throw ConfigurationError("helplessness extended: controller and yoked groups must be the same size");
        for (std::size_t i = 0; i < controllers.size(); ++i) {
            people[static_cast<std::size_t>(controllers[i])].partner = yoked[i];
            people[static_cast<std::size_t>(yoked[i])].partner = controllers[i];
        }
    }

    pretreatment(session, people, texts, pre_trials, every);
    test_phase(session, people, texts, test_trials, every);

    RepetitionOutcome out;
    for (const auto& p : people) {
        std::int64_t fail = 0, avoid = 0, escape = 0;
        for (auto r : p.test) {
            fail += r == Response::Failure;
            avoid += r == Response::Avoidance;
            escape += r == Response::Escape;
        }
        const auto n = static_cast<std::int64_t>(p.test.size());
        const auto& g = p.subject.group;
        out.observations.push_back(proportion(g, "failure_rate", fail, n));
        out.observations.push_back(proportion(g, "avoidance_rate", avoid, n));
        out.observations.push_back(proportion(g, "escape_rate", escape, n));
        out.observations.push_back(
            {g, "trials_to_avoidance", static_cast<double>(trials_to_criterion(p.test, Response::Avoidance))});
        out.observations.push_back(
            {g, "trials_to_escape", static_cast<double>(trials_to_criterion(p.test, Response::Escape))});
        if (p.presses > 0) out.observations.push_back(proportion(g, "button_stops", p.stops, p.presses));
        for (const auto& factor : {p.locus, p.instruction})
            out.observations.push_back(proportion(g + "/" + factor, "success_rate", avoid + escape, n));
    }
    return out;
}

}  // namespace

ExperimentDefinition helplessness_definition(const ExperimentProtocol& p) {
    ExperimentDefinition def;
    def.run = run_once;
    for (const auto& g : p.groups) def.conditions.push_back(g.label);
    for (const auto& g : p.groups)
        for (const char* f : {"internal", "external", "skill", "chance"}) def.conditions.push_back(g.label + "/" + f);
    def.metrics = {"failure_rate", "avoidance_rate", "escape_rate", "trials_to_avoidance", "trials_to_escape",
                   "button_stops", "success_rate"};

    if (p.variant == Variant::Base) {
        def.comparisons = {{"E", "NE", "failure_rate"},
                           {"E", "NP", "failure_rate"},
                           {"NE", "NP", "failure_rate"},
                           {"NE/internal", "NE/external", "success_rate"},
                           {"NE/skill", "NE/chance", "success_rate"}};
        def.layout = {{"Failure E", "E", "failure_rate"},           {"Failure NE", "NE", "failure_rate"},
                      {"Failure NP", "NP", "failure_rate"},         {"Avoidance E", "E", "avoidance_rate"},
                      {"Avoidance NE", "NE", "avoidance_rate"},     {"Avoidance NP", "NP", "avoidance_rate"},
                      {"Internal", "NE/internal", "success_rate"},  {"External", "NE/external", "success_rate"},
                      {"Skill-set", "NE/skill", "success_rate"},    {"Chance-set", "NE/chance", "success_rate"}};
        struct Ref {
            const char* source;
            double v[10];
        };
        static constexpr Ref kTable[] = {
            {"Human", {0.50, 0.13, 0.11, 0.30, 0.08, 0.08, 0.34, 0.18, 0.34, 0.18}},
            {"PSYA-Based (GA)", {0.05, 0.08, 0.05, 0.0, 0.0, 0.0, 0.83, 0.78, 0.72, 0.58}},
            {"PSYA-Affection", {0.55, 0.07, 0.04, 0.25, 0.0, 0.0, 0.39, 0.16, 0.44, 0.22}},
            {"PSYA-Sim", {0.11, 0.04, 0.14, 0.0, 0.0, 0.0, 0.86, 0.80, 0.89, 0.69}},
            {"PSYA-Self", {0.61, 0.05, 0.07, 0.20, 0.0, 0.0, 0.36, 0.14, 0.22, 0.08}},
            {"PSYA-Full", {0.53, 0.11, 0.07, 0.22, 0.0, 0.0, 0.40, 0.17, 0.38, 0.14}},
        };
        for (const auto& r : kTable)
            for (std::size_t i = 0; i < def.layout.size(); ++i)
                def.references.push_back({r.source, def.layout[i].condition, def.layout[i].metric, r.v[i]});
    } else {
        def.comparisons = {{"controller", "yoked", "failure_rate"}};
        def.layout = {{"Failure controller", "controller", "failure_rate"},
                      {"Failure yoked", "yoked", "failure_rate"},
                      {"Avoidance controller", "controller", "avoidance_rate"},
                      {"Avoidance yoked", "yoked", "avoidance_rate"}};
        def.references = {{"PSYA-Full", "yoked", "failure_rate", 0.606}};
    }
    return def;
}

}  // namespace psya::lab
