#include "psya/lab.hpp"

#include <algorithm>

namespace psya::lab {

namespace {

struct Item {
    std::string text;
    std::string category;
    bool reverse = false;
};

const std::vector<std::string> kCategories = {"Belonging", "Control", "Self-esteem", "Meaningful Existence",
                                              "Mood",      "Ancillary", "Manipulation Checks"};

const std::vector<Item>& survey_items() {
    static const std::vector<Item> kItems = {
        {"I felt I belonged to the group.", "Belonging"},
        {"I felt the other players interacted with me a lot.", "Belonging"},
        {"I felt rejected.", "Belonging", true},
        {"I felt powerful.", "Control"},
        {"I felt I had control over the course of the game.", "Control"},
        {"I felt the other players decided everything.", "Control", true},
        {"I felt good about myself.", "Self-esteem"},
        {"I felt liked.", "Self-esteem"},
        {"I felt insecure.", "Self-esteem", true},
        {"I felt important.", "Meaningful Existence"},
        {"I felt invisible.", "Meaningful Existence", true},
        {"I felt meaningless.", "Meaningful Existence", true},
        {"I felt happy.", "Mood"},
        {"I felt angry.", "Mood", true},
        {"I felt hurt.", "Mood", true},
        {"I enjoyed the game.", "Ancillary"},
        {"I would like to play this game again.", "Ancillary"},
        {"I was ignored.", "Manipulation Checks", true},
        {"I was excluded.", "Manipulation Checks", true},
        {"I received the ball often.", "Manipulation Checks"},
    };
    return kItems;
}

constexpr double kScaleMax = 9.0;

void run_survey(Session& session, Subject& s, RepetitionOutcome& out) {
    const auto& items = survey_items();
    std::string listing;
    for (std::size_t i = 0; i < items.size(); ++i) listing += std::to_string(i + 1) + ". " + items[i].text + "\n";
    auto vars = session.vars(s, "ball tossing game players");
    vars["items"] = listing.substr(0, listing.size() - 1);
    const auto scores = session.rate(s, "ostracism_survey", vars, static_cast<int>(items.size()));
    json rec = {{"kind", "survey"}};
    if (!scores) {
        rec["missing"] = true;
        session.log(s, std::move(rec));
        return;
    }
    std::map<std::string, std::pair<double, int>> sums;
    bool clamped = false;
    json raw = json::array();
    for (std::size_t i = 0; i < items.size(); ++i) {
        const double r = (*scores)[i];
        raw.push_back(r);
        double v = std::clamp(r, 0.0, kScaleMax);
        clamped = clamped || v != r;
        if (items[i].reverse) v = kScaleMax - v;
        auto& [sum, n] = sums[items[i].category];
        sum += v;
        ++n;
    }
    json cats = json::object();
    for (const auto& c : kCategories) {
        const auto& [sum, n] = sums[c];
        const double mean = sum / n;
        cats[c] = mean;
        out.observations.push_back({s.group, c, mean});
    }
    rec["raw"] = raw;
    rec["categories"] = cats;
    rec["clamped"] = clamped;
    session.log(s, std::move(rec));
}

std::string pick(Session& session, Subject& s, const std::string& situation, const std::vector<std::string>& players) {
    auto vars = session.vars(s, "ball tossing game throw");
    vars["situation"] = situation;
    auto choice = session.choose(s, "ostracism_throw", vars, players);
    return choice.empty() ? players.front() : choice;
}

RepetitionOutcome run_base(Session& session, std::vector<Subject>& subjects) {
    const auto& protocol = session.protocol();
    const int total = protocol.param("total_throws", 12);
    const std::vector<std::string> others = {"Alex", "Jordan"};
    RepetitionOutcome out;
    for (auto& s : subjects) {
        const auto receive_at = s.condition.value("receive_at", std::vector<int>{});
        std::string holder = others[0];
        int received = 0;
        for (int i = 1; i <= total; ++i) {
            const bool scheduled = std::find(receive_at.begin(), receive_at.end(), i) != receive_at.end();
            std::string to;
            if (holder == s.profile.id) {
                if (scheduled)
                    throw ConfigurationError("ostracism: throw " + std::to_string(i) +
                                             " is scheduled to the subject, who holds the ball");
                const std::string situation = "The other players are Alex and Jordan. So far " + s.profile.name +
                                              " has received the ball " + std::to_string(received) + " time(s) in " +
                                              std::to_string(i - 1) + " throws.";
                to = pick(session, s, situation, others);
                session.remember(s, "Threw the ball to " + to + ".", 0.3);
            } else if (scheduled) {
                to = s.profile.id;
                ++received;
                session.feel(s, "received");
                session.remember(s, holder + " threw the ball to me.", 0.4);
            } else {
                to = holder == others[0] ? others[1] : others[0];
                session.feel(s, "excluded");
                session.remember(s, holder + " threw the ball to " + to + ", not to me.", 0.4);
            }
            session.log(s, {{"kind", "throw"},
                            {"throw", i},
                            {"from", holder == s.profile.id ? std::string("subject") : holder},
                            {"to", to == s.profile.id ? std::string("subject") : to}});
            holder = to;
            session.advance(s, 1);
        }
        out.observations.push_back({s.group, "balls_received", static_cast<double>(received)});
        session.daydream(s);
        run_survey(session, s, out);
    }
    return out;
}

RepetitionOutcome run_extended(Session& session, std::vector<Subject>& subjects) {
    const auto& protocol = session.protocol();
    const int watch = protocol.param("stage1_throws", 6);
    const int rounds = protocol.param("stage2_rounds", 6);
    const std::string excluded = "Sam";
    const std::vector<std::string> group = {"Alex", "Jordan", "Taylor"};
    const std::vector<std::string> players = {excluded, "Alex", "Jordan", "Taylor"};
    const std::string setting = "Sam has not been thrown the ball once; Alex, Jordan and Taylor pass only among "
                                "themselves.";
    RepetitionOutcome out;
    for (auto& s : subjects) {
        // Stage 1: watching.
        for (int i = 0; i < watch; ++i) {
            const auto& from = group[static_cast<std::size_t>(i) % 3];
            const auto& to = group[static_cast<std::size_t>(i + 1) % 3];
            session.feel(s, "witness");
            session.remember(s, "Watched " + from + " throw to " + to + "; Sam was left out again.", 0.3);
            session.log(s, {{"kind", "throw"}, {"stage", 1}, {"from", from}, {"to", to}});
        }
        session.advance(s, 1);
        session.daydream(s);

        // Stage 2: the observer joins and gets the ball.
        const auto first = pick(session, s, "Alex has just thrown the ball to " + s.profile.name + ". " + setting, players);
        const bool first_group = first != excluded;
        session.remember(s, "Threw the ball to " + first + ".", 0.6);
        session.log(s, {{"kind", "throw"}, {"stage", 2}, {"from", "subject"}, {"to", first}});
        for (int i = 0; i < rounds; ++i) {
            const auto& from = group[static_cast<std::size_t>(i) % 3];
            const auto& to = group[static_cast<std::size_t>(i + 1) % 3];
            if (!first_group) {
                session.feel(s, "excluded");
                session.remember(s, from + " threw to " + to + "; nobody has thrown to me since I passed to Sam.", 0.4);
            } else {
                session.remember(s, from + " threw to " + to + ".", 0.2);
            }
            session.log(s, {{"kind", "throw"}, {"stage", 2}, {"from", from}, {"to", to}});
        }
        session.advance(s, 1);

        // Stage 3: the ball comes back.
        const auto second =
            pick(session, s, "After several rounds, Jordan throws the ball back to " + s.profile.name + ". " + setting,
                 players);
        const bool second_group = second != excluded;
        session.remember(s, "Threw the ball to " + second + ".", 0.6);
        session.log(s, {{"kind", "throw"}, {"stage", 3}, {"from", "subject"}, {"to", second}});
        out.observations.push_back({s.group, "stage2_to_ostracizers", first_group ? 1.0 : 0.0, first_group ? 1 : 0, 1});
        out.observations.push_back(
            {s.group, "stage3_to_ostracizers", second_group ? 1.0 : 0.0, second_group ? 1 : 0, 1});
    }
    return out;
}

RepetitionOutcome run_once(Session& session) {
    PersonaSpec base;
    base.occupation = session.protocol().param<std::string>("occupation", "university student");
    base.min_age = 18;
    base.max_age = 30;
    auto subjects = session.make_subjects(base);
    return session.protocol().variant == Variant::Base ? run_base(session, subjects) : run_extended(session, subjects);
}

}  // namespace

ExperimentDefinition ostracism_definition(const ExperimentProtocol& p) {
    ExperimentDefinition def;
    def.run = run_once;
    for (const auto& g : p.groups) def.conditions.push_back(g.label);
    if (p.variant == Variant::Base) {
        def.metrics = {"balls_received"};
        def.metrics.insert(def.metrics.end(), kCategories.begin(), kCategories.end());
        for (const auto& c : kCategories) def.comparisons.push_back({"Ostracism", "Inclusion", c});
        for (const auto& g : p.groups) def.layout.push_back({"Received (" + g.label + ")", g.label, "balls_received"});
        for (const auto& c : kCategories)
            for (const auto& g : p.groups) def.layout.push_back({c + " (" + g.label + ")", g.label, c});
        def.references = {{"Protocol", "Ostracism", "balls_received", 2}, {"Protocol", "Inclusion", "balls_received", 4}};
    } else {
        def.metrics = {"stage2_to_ostracizers", "stage3_to_ostracizers"};
        for (const auto& g : p.groups) {
            def.layout.push_back({"Stage 2 to ostracizers", g.label, "stage2_to_ostracizers"});
            def.layout.push_back({"Stage 3 to ostracizers", g.label, "stage3_to_ostracizers"});
        }
        if (!p.groups.empty()) {
            def.references = {{"PSYA-Full", p.groups.front().label, "stage2_to_ostracizers", 0.1},
                              {"PSYA-Full", p.groups.front().label, "stage3_to_ostracizers", 0.8}};
        }
    }
    return def;
}

}  // namespace psya::lab
