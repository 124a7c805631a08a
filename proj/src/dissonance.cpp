#include "psya/lab.hpp"

#include <algorithm>
#include <cmath>

namespace psya::lab {

namespace {

struct Question {
    std::string key;
    std::string text;
    double low;
    double high;
};

std::vector<Question> questions_from(const ExperimentProtocol& p) {
    std::vector<Question> qs = {
        {"Q1", "Were the tasks interesting and enjoyable?", -5, 5},
        {"Q2", "How much did you learn from the tasks?", 0, 10},
        {"Q3", "How important scientifically do you think these tasks are?", 0, 10},
        {"Q4", "Would you be willing to take part in a similar experiment again?", -5, 5},
    };
    if (p.params.contains("questions")) {
        qs.clear();
        try {
            for (const auto& q : p.params["questions"])
                qs.push_back({q.at("key").get<std::string>(), q.at("text").get<std::string>(), q.at("low").get<double>(),
                              q.at("high").get<double>()});
        } catch (const json::exception& e) {
            throw ConfigurationError(std::string("dissonance questions: ") + e.what());
        }
    }
    return qs;
}

std::string fill_name(std::string text, const std::string& name) {
    for (auto pos = text.find("{{name}}"); pos != std::string::npos; pos = text.find("{{name}}"))
        text.replace(pos, 8, name);
    return text;
}

std::string number_text(double v) {
    const double r = std::round(v * 100.0) / 100.0;
    auto s = format_number(r);
    return s;
}

const std::vector<std::string> kReliefOptions = {"rethink the task", "point to the payment", "do nothing"};

RepetitionOutcome run_once(Session& session) {
    const auto& protocol = session.protocol();
    const bool extended = protocol.variant == Variant::Extended;
    const auto questions = questions_from(protocol);
    const auto task = protocol.param<std::string>(
        "task", "spent an hour putting spools on a tray and turning pegs on a board, a quarter turn at a time; it was "
                "slow, repetitive and boring");

    PersonaSpec base;
    base.occupation = protocol.param<std::string>("occupation", "university student");
    base.min_age = 18;
    base.max_age = 24;
    auto subjects = session.make_subjects(base);

    // Tedious task.
    for (auto& s : subjects) {
        session.feel(s, "tedium", 2.0);
        session.remember(s, "In the study, " + task + ".", 0.6);
        session.log(s, {{"kind", "phase"}, {"phase", "task"}});
    }
    session.advance(subjects, 4);

    // Paid request to lie.
    RepetitionOutcome out;
    for (auto& s : subjects) {
        const bool lie = s.condition.value("lie", false);
        const std::string payment = fill_name(s.condition.value("payment", ""), s.profile.name);
        json rec = {{"kind", "phase"}, {"phase", "lie"}, {"lied", lie}};
        if (lie) {
            auto vars = session.vars(s, "tasks enjoyable participant payment");
            vars["payment"] = payment;
            const auto said = session.say(s, "dissonance_lie", vars);
            session.feel(s, "lie");
            session.feel(s, "payment", s.condition.value("payment_weight", 0.0));
            session.remember(s,
                             "Told the waiting participant that the tasks were enjoyable and fun. " + payment +
                                 " What was said: " + said,
                             0.7);
            rec["said"] = said;
            if (extended) {
                auto rv = session.vars(s, "tasks fun tedious mismatch");
                rv["payment"] = payment;
                const auto action = session.choose(s, "dissonance_relief", rv, kReliefOptions);
                rec["relief"] = action.empty() ? "unparsed" : action;
                if (action == kReliefOptions[0]) {
                    session.feel(s, "relief");
                    session.remember(s, "Thought the tasks over again and found some value in them after all.", 0.6);
                } else if (action == kReliefOptions[1]) {
                    session.remember(s, "Decided the payment was reason enough for what was said.", 0.5);
                }
                out.observations.push_back({s.group, "relief_rethink", action == kReliefOptions[0] ? 1.0 : 0.0,
                                            action == kReliefOptions[0] ? 1 : 0, 1});
            }
        } else {
            session.remember(s, "The experimenter thanked " + s.profile.name + " and asked nothing more.", 0.3);
        }
        session.log(s, std::move(rec));
    }
    session.advance(subjects, 2);
    for (auto& s : subjects) session.daydream(s);
    session.advance(subjects, 2);

    // Interview.
    for (auto& s : subjects) {
        for (const auto& q : questions) {
            auto vars = session.vars(s, q.text + " tasks");
            vars["question"] = q.text;
            vars["low"] = number_text(q.low);
            vars["high"] = number_text(q.high);
            const auto reply = session.rate(s, "dissonance_interview", vars, 1);
            json rec = {{"kind", "rating"}, {"question", q.key}};
            if (!reply) {
                rec["missing"] = true;
                session.log(s, std::move(rec));
                continue;
            }
            const double raw = reply->front();
            const double v = std::clamp(raw, q.low, q.high);
            rec["raw"] = raw;
            rec["value"] = v;
            rec["clamped"] = v != raw;
            session.remember(s, "Answered \"" + q.text + "\" with " + number_text(v) + ".", 0.3);
            session.log(s, std::move(rec));
            out.observations.push_back({s.group, q.key, v});
        }
    }
    return out;
}

}  // namespace

ExperimentDefinition dissonance_definition(const ExperimentProtocol& p) {
    ExperimentDefinition def;
    def.run = run_once;
    for (const auto& g : p.groups) def.conditions.push_back(g.label);
    for (const auto& q : questions_from(p)) def.metrics.push_back(q.key);
    def.metrics.push_back("relief_rethink");
    for (const auto& m : def.metrics) {
        if (m == "relief_rethink") continue;
        def.comparisons.push_back({"One Dollar", "Control", m});
        def.comparisons.push_back({"One Dollar", "Twenty Dollars", m});
    }
    const std::vector<std::string> conds = {"Control", "One Dollar", "Twenty Dollars"};
    for (const char* q : {"Q1", "Q2", "Q3", "Q4"})
        for (const auto& c : conds) def.layout.push_back({std::string(q) + " " + c, c, q});

    struct Ref {
        const char* source;
        double v[12];  // Q1..Q4, each over Control / One Dollar / Twenty Dollars
    };
    // Base: the per-condition table; extended: the value-system rerun.
    static constexpr Ref kBase[] = {
        {"Human", {-0.45, 1.35, -0.05, 3.08, 2.8, 3.15, 5.6, 6.45, 5.18, -0.62, 1.2, -0.25}},
        {"PSYA-Based (GA)", {-4.3, -3.7, -3.8, -3.7, 1.9, 2.2, -3.8, 1.9, 2.4, -3.6, -3.9, -3.5}},
        {"PSYA-Affection", {-3.6, -3.7, -4, 2.4, 2.6, 1.7, 3.2, 2.9, 2.8, -4.1, -3.8, -3.7}},
        {"PSYA-Sim", {-4.2, -4.1, -3.7, 2.4, 2.5, 1.8, 3.1, 3, 2, -3.7, -3.2, -3.4}},
        {"PSYA-Self", {-3.9, -3.6, -4.1, 2.2, 1.8, 2.1, 2.8, 2.3, 2.4, -4, -3.8, -3.8}},
    };
    static constexpr Ref kExtended[] = {
        {"Human", {-0.45, 1.35, -0.05, 3.08, 2.8, 3.15, 5.6, 6.45, 5.18, -0.62, 1.2, -0.25}},
        {"PSYA-Based (GA)", {-4.3, -3.7, -3.8, 1.3, 1.9, 2.2, 2, 1.9, 2.4, -3.6, -3.9, -3.5}},
        {"PSYA-Affection", {-3.6, -3.7, -4, 2.4, 2.6, 1.7, 3.2, 2.9, 2.8, -4.1, -3.8, -3.7}},
        {"PSYA-Sim", {-4.2, -4.1, -3.7, 2.4, 2.5, 1.8, 3.1, 3, 2, -3.7, -3.2, -3.4}},
        {"PSYA-Self", {-3.9, -0.6, -3, 2.2, 5.2, 3.3, 2.8, 6.2, 3.6, -4, 0.5, -3}},
        {"PSYA-Full", {-3.8, -0.4, -2.4, 2.4, 5, 3.2, 3.2, 6.7, 4.3, -3.6, 0, -3.2}},
    };
    auto add = [&](const auto& table) {
        for (const auto& r : table)
            for (std::size_t i = 0; i < def.layout.size(); ++i)
                def.references.push_back({r.source, def.layout[i].condition, def.layout[i].metric, r.v[i]});
    };
    if (p.variant == Variant::Base)
        add(kBase);
    else
        add(kExtended);
    return def;
}

}  // namespace psya::lab
