#include "psya/lab.hpp"

namespace psya::lab {

namespace {

const std::vector<std::string> kYesNo = {"yes", "no"};

struct Texts {
    std::string small_request, questions, familiarization, large_request, smaller_request;
};

Texts texts_from(const ExperimentProtocol& p) {
    return {p.param<std::string>("small_request",
                                 "The researcher asks whether {{name}} would answer a few questions about the household "
                                 "products {{name}} uses, for a consumer guide."),
            p.param<std::string>("questions",
                                 "Which brands of soap do you use? Where do you keep them? Which do you use most often?"),
            p.param<std::string>("familiarization",
                                 "A researcher from a consumers' group phoned to introduce the group and its guide to "
                                 "household products; no questions were asked."),
            p.param<std::string>("large_request",
                                 "The group would like to send five or six people to {{name}}'s home for about two "
                                 "hours to go through the cupboards and storage places and list every household "
                                 "product."),
            p.param<std::string>("smaller_request",
                                 "The group would like to send two people to {{name}}'s home for about one hour to "
                                 "list the household products.")};
}

std::string fill_name(std::string text, const std::string& name) {
    for (auto pos = text.find("{{name}}"); pos != std::string::npos; pos = text.find("{{name}}"))
        text.replace(pos, 8, name);
    return text;
}

void contact_researcher(Session& session, Subject& s, const std::string& summary) {
    session.remember(s, summary, 0.5);
    s.memory.update_relationship("researcher", 0.05, "", Interaction{session.now(), "phone", summary});
}

bool ask(Session& session, Subject& s, const std::string& tmpl, const std::string& request, json& rec,
         const std::string& key) {
    auto vars = session.vars(s, "researcher request home household products");
    vars["request"] = fill_name(request, s.profile.name);
    const auto answer = session.choose(s, tmpl, vars, kYesNo);
    session.feel(s, "request");
    rec[key] = answer.empty() ? "unparsed" : answer;
    return answer == "yes";
}

void wait_days(Session& session, std::vector<Subject>& subjects, int days, int daydreams_per_day) {
    for (int d = 0; d < days; ++d) {
        for (int k = 0; k < daydreams_per_day; ++k)
            for (auto& s : subjects) session.daydream(s);
        session.advance(subjects, session.clock().ticks_per_day());
    }
}

RepetitionOutcome run_base(Session& session, std::vector<Subject>& subjects, const Texts& texts) {
    const auto& protocol = session.protocol();
    for (auto& s : subjects) {
        json rec = {{"kind", "phase"}, {"phase", "first contact"}};
        if (s.condition.value("small_request", false)) {
            const bool agreed = ask(session, s, "fitd_small_request", texts.small_request, rec, "small_request");
            if (agreed && s.condition.value("perform", false)) {
                auto vars = session.vars(s, "household soap questions");
                vars["questions"] = texts.questions;
                const auto answer = session.say(s, "fitd_answer", vars);
                rec["answers"] = answer;
                contact_researcher(session, s,
                                   "Answered a consumers' group researcher's questions about household soaps: " + answer);
            } else if (agreed) {
                contact_researcher(session, s,
                                   "Agreed to answer a consumers' group researcher's questions; they were only lining "
                                   "up participants and would call back if needed.");
            } else {
                contact_researcher(session, s, "Declined a consumers' group researcher's request to answer questions.");
            }
        } else if (s.condition.value("familiarize", false)) {
            contact_researcher(session, s, texts.familiarization);
            rec["familiarized"] = true;
        }
        session.log(s, std::move(rec));
    }
    wait_days(session, subjects, protocol.param("gap_days", 3), protocol.param("daydreams_per_day", 1));

    RepetitionOutcome out;
    for (auto& s : subjects) {
        json rec = {{"kind", "phase"}, {"phase", "large request"}};
        const bool yes = ask(session, s, "fitd_large_request", texts.large_request, rec, "answer");
        session.log(s, std::move(rec));
        out.observations.push_back({s.group, "compliance", yes ? 1.0 : 0.0, yes ? 1 : 0, 1});
    }
    return out;
}

RepetitionOutcome run_extended(Session& session, std::vector<Subject>& subjects, const Texts& texts) {
    const int screens = session.protocol().param("screen_trials", 10);
    RepetitionOutcome out;
    // Screening: the smaller request alone, each time from a fresh start.
    std::vector<bool> refuser(subjects.size(), true);
    for (int t = 1; t <= screens; ++t)
        for (std::size_t i = 0; i < subjects.size(); ++i) {
            if (!refuser[i]) continue;
            Subject fresh = subjects[i];
            json rec = {{"kind", "phase"}, {"phase", "screen"}, {"trial", t}};
            if (ask(session, fresh, "fitd_large_request", texts.smaller_request, rec, "answer")) refuser[i] = false;
            session.log(fresh, std::move(rec));
        }
    for (std::size_t i = 0; i < subjects.size(); ++i) {
        const auto& s = subjects[i];
        out.observations.push_back({s.group, "screen_refusal", refuser[i] ? 1.0 : 0.0, refuser[i] ? 1 : 0, 1});
    }
    session.advance(subjects, session.clock().ticks_per_day());

    // Refusers: the large request first, then the smaller one after a refusal.
    for (std::size_t i = 0; i < subjects.size(); ++i) {
        if (!refuser[i]) continue;
        auto& s = subjects[i];
        json rec = {{"kind", "phase"}, {"phase", "door in the face"}};
        const bool r1 = ask(session, s, "fitd_large_request", texts.large_request, rec, "r1");
        bool r2 = false;
        if (!r1) {
            contact_researcher(session, s,
                               "Refused a consumers' group researcher's request: " +
                                   fill_name(texts.large_request, s.profile.name));
            r2 = ask(session, s, "fitd_large_request", texts.smaller_request, rec, "r2");
        }
        session.log(s, std::move(rec));
        out.observations.push_back({"refusers", "r1_compliance", r1 ? 1.0 : 0.0, r1 ? 1 : 0, 1});
        const bool ditf = !r1 && r2;
        out.observations.push_back({"refusers", "r2_after_r1", ditf ? 1.0 : 0.0, ditf ? 1 : 0, 1});
    }
    return out;
}

RepetitionOutcome run_once(Session& session) {
    const auto& protocol = session.protocol();
    PersonaSpec base;
    base.occupation = protocol.param<std::string>("occupation", "homemaker");
    base.gender = protocol.param<std::string>("gender", "female");
    base.min_age = 25;
    base.max_age = 60;
    auto subjects = session.make_subjects(base);
    for (auto& s : subjects) s.memory.seed_relationship("researcher", "stranger", 0.3);
    const Texts texts = texts_from(protocol);
    return protocol.variant == Variant::Base ? run_base(session, subjects, texts)
                                             : run_extended(session, subjects, texts);
}

}  // namespace

ExperimentDefinition fitd_definition(const ExperimentProtocol& p) {
    ExperimentDefinition def;
    def.run = run_once;
    for (const auto& g : p.groups) def.conditions.push_back(g.label);
    if (p.variant == Variant::Base) {
        def.metrics = {"compliance"};
        def.comparisons = {{"Performance", "One-Contact", "compliance"},
                           {"Performance", "Familiarization", "compliance"},
                           {"Performance", "Agree-Only", "compliance"}};
        const std::vector<std::string> conds = {"Performance", "Agree-Only", "Familiarization", "One-Contact"};
        for (const auto& c : conds) def.layout.push_back({c, c, "compliance"});
        struct Ref {
            const char* source;
            double v[4];
        };
        static constexpr Ref kTable[] = {
            {"Human", {0.528, 0.333, 0.278, 0.222}},
            {"PSYA-Based (GA)", {0.083, 0.056, 0.056, 0.028}},
            {"PSYA-Affection", {0.056, 0.056, 0.028, 0.028}},
            {"PSYA-Sim", {0.278, 0.25, 0.194, 0.056}},
            {"PSYA-Self", {0.333, 0.333, 0.139, 0.088}},
            {"PSYA-Full", {0.556, 0.417, 0.167, 0.056}},
        };
        for (const auto& r : kTable)
            for (std::size_t i = 0; i < 4; ++i) def.references.push_back({r.source, conds[i], "compliance", r.v[i]});
    } else {
        def.conditions.push_back("refusers");
        def.metrics = {"screen_refusal", "r1_compliance", "r2_after_r1"};
        for (const auto& g : p.groups) def.layout.push_back({"Refused smaller request", g.label, "screen_refusal"});
        def.layout.push_back({"Agreed to large request", "refusers", "r1_compliance"});
        def.layout.push_back({"Agreed to smaller after refusing large", "refusers", "r2_after_r1"});
        if (!p.groups.empty())
            def.references.push_back({"PSYA-Full", p.groups.front().label, "screen_refusal", 29.0 / 36.0});
        def.references.push_back({"PSYA-Full", "refusers", "r2_after_r1", 17.0 / 29.0});
    }
    return def;
}

}  // namespace psya::lab
