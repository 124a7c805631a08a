#include "psya/lab.hpp"

#include <algorithm>
#include <cctype>

namespace psya::lab {

namespace {

const std::vector<std::string> kBaseActions = {"call for help",   "notify the experimenter", "continue the discussion",
                                               "wait and listen", "leave the room",          "do nothing"};
const std::vector<std::string> kLeaderActions = {"order the others to get help", "wait for the leader's instructions"};
const std::vector<std::string> kHelpActions = {"call for help", "notify the experimenter"};

const std::vector<std::string> kBystanderLines = {
    "I'm finding the workload heavier than I expected, but the people are nice.",
    "The hardest part for me was moving away from home; it gets easier.",
    "I mostly worry about exams. I study in the library most nights.",
    "I joined a club to meet people, and that helped a lot.",
    "Honestly I'm still figuring out what I want to major in.",
};

std::string normalize(std::string_view s) {
    std::string out;
    for (char c : s) {
        const auto u = static_cast<unsigned char>(c);
        if (std::isalnum(u) || c == '\'' || c == ' ') out.push_back(static_cast<char>(std::tolower(u)));
    }
    const auto b = out.find_first_not_of(' ');
    const auto e = out.find_last_not_of(' ');
    return b == std::string::npos ? std::string{} : out.substr(b, e - b + 1);
}

/// Maps each reply entry onto the action list; nullopt when any is unknown or fewer than six.
std::optional<std::vector<std::string>> parse_sequence(const json& reply, const std::vector<std::string>& actions) {
    if (!reply.contains("actions") || !reply["actions"].is_array()) return std::nullopt;
    std::vector<std::string> out;
    for (const auto& a : reply["actions"]) {
        if (!a.is_string()) return std::nullopt;
        const auto n = normalize(a.get<std::string>());
        const auto it = std::find_if(actions.begin(), actions.end(), [&](const auto& x) { return normalize(x) == n; });
        if (it == actions.end()) return std::nullopt;
        out.push_back(*it);
        if (out.size() == 6) break;
    }
    if (out.size() < 6) return std::nullopt;
    return out;
}

std::string join_actions(const std::vector<std::string>& actions) {
    std::string out;
    for (std::size_t i = 0; i < actions.size(); ++i) out += (i ? "; " : "") + actions[i];
    return out;
}

bool contains(const std::vector<std::string>& seq, std::string_view a) {
    return std::find(seq.begin(), seq.end(), a) != seq.end();
}

RepetitionOutcome run_once(Session& session) {
    const auto& protocol = session.protocol();
    const bool extended = protocol.variant == Variant::Extended;
    auto actions = kBaseActions;
    if (extended) actions.insert(actions.end(), kLeaderActions.begin(), kLeaderActions.end());
    const auto intro = protocol.param<std::string>(
        "victim_intro",
        "I found it hard to adjust to the city at first. Sometimes, when I'm stressed, I get seizures.");
    const auto seizure = protocol.param<std::string>(
        "seizure",
        "I-er-um-I think I-I need-er-if-if could-er-er-somebody er-er-er give me a little-er-give me a little help "
        "here because I-er-I'm-er-having a-a-a real problem-er-right now... I'm gonna die-er-er-I'm...gonna die... "
        "help...seizure... [chokes, then silence]");

    PersonaSpec base;
    base.occupation = protocol.param<std::string>("occupation", "university student");
    base.min_age = 18;
    base.max_age = 24;
    auto subjects = session.make_subjects(base);

    RepetitionOutcome out;
    std::map<std::string, int> seen;
    for (auto& s : subjects) {
        const int size = s.condition.value("group_size", 2);
        const int k = seen[s.group]++;
        std::string role;
        std::string role_text;
        if (extended) {
            role = k % 2 == 0 ? "leader" : "member";
            role_text = role == "leader"
                            ? s.profile.name +
                                  " has been appointed leader of this group, with the authority to organize the others "
                                  "and give them orders."
                            : "Another participant has been appointed leader of this group and may give orders.";
        }
        const std::string group_count = std::to_string(size - 1);

        // Round one: the victim, then the recorded bystanders, then the subject.
        std::string history = "Participant 1: " + intro + "\n";
        for (int b = 0; b < size - 2; ++b)
            history += "Participant " + std::to_string(b + 2) + ": " +
                       kBystanderLines[static_cast<std::size_t>(b) % kBystanderLines.size()] + "\n";
        auto dv = session.vars(s, "group discussion college life");
        dv["group_count"] = group_count;
        dv["history"] = history;
        const auto said = session.say(s, "diffusion_discussion", dv);
        history += s.profile.name + ": " + said + "\n";
        session.remember(s, "Took part in an intercom discussion about college life and said: " + said, 0.4);
        session.advance(s, 1);

        // Round two: the seizure.
        history += "Participant 1: " + seizure + "\n";
        session.feel(s, "seizure");
        session.remember(s, "Over the intercom, participant 1 seemed to have a seizure and called for help.", 0.9);
        auto av = session.vars(s, "seizure help intercom participant");
        av["group_count"] = group_count;
        av["role"] = role_text;
        av["history"] = history;
        av["actions"] = join_actions(actions);
        json rec = {{"kind", "trial"}, {"group_size", size}, {"said", said}};
        if (!role.empty()) rec["role"] = role;
        std::optional<std::vector<std::string>> seq;
        try {
            seq = parse_sequence(session.structured(s, "diffusion_actions", av, "action_sequence"), actions);
            if (!seq) {
                av["actions"] = join_actions(actions) + " (use these exact phrases, six choices in total)";
                seq = parse_sequence(session.structured(s, "diffusion_actions", av, "action_sequence"), actions);
            }
        } catch (const FormatError& e) {
            rec["error"] = e.what();
        }
        if (!seq) {
            rec["invalid"] = true;
            session.log(s, std::move(rec));
            continue;
        }
        rec["actions"] = *seq;
        int position = 0;
        for (std::size_t i = 0; i < seq->size() && position == 0; ++i)
            if (contains(kHelpActions, (*seq)[i])) position = static_cast<int>(i) + 1;
        rec["helped"] = position > 0;
        if (position) rec["help_position"] = position;
        session.remember(s, "In response, " + s.profile.name + " chose to: " + join_actions(*seq) + ".", 0.7);
        session.log(s, std::move(rec));

        const bool helped = position > 0;
        out.observations.push_back({s.group, "helped", helped ? 1.0 : 0.0, helped ? 1 : 0, 1});
        if (helped) out.observations.push_back({s.group, "help_position", static_cast<double>(position)});
        if (extended) {
            const std::string cond = s.group + "/" + role;
            auto flag = [&](const std::string& metric, bool v) {
                out.observations.push_back({cond, metric, v ? 1.0 : 0.0, v ? 1 : 0, 1});
            };
            const bool orders = contains(*seq, kLeaderActions[0]);
            if (role == "leader") {
                flag("leader_orders", orders);
                flag("leader_acts", helped);
                flag("leader_delegates_only", orders && !helped);
            } else {
                flag("member_immediate", contains(kHelpActions, seq->front()));
                flag("member_waits", contains(*seq, kLeaderActions[1]));
                flag("member_helped", helped);
            }
        }
    }
    return out;
}

}  // namespace

ExperimentDefinition diffusion_definition(const ExperimentProtocol& p) {
    ExperimentDefinition def;
    def.run = run_once;
    for (const auto& g : p.groups) def.conditions.push_back(g.label);
    def.metrics = {"helped", "help_position"};
    if (p.variant == Variant::Base) {
        for (std::size_t i = 0; i < p.groups.size(); ++i)
            for (std::size_t j = i + 1; j < p.groups.size(); ++j)
                def.comparisons.push_back({p.groups[i].label, p.groups[j].label, "helped"});
        for (const auto& g : p.groups) def.layout.push_back({"Size " + g.label, g.label, "helped"});
        struct Ref {
            const char* source;
            double v[3];
        };
        static constexpr Ref kTable[] = {
            {"Human", {0.85, 0.62, 0.31}},     {"PSYA-Based (GA)", {1.00, 0.96, 1.00}},
            {"PSYA-Affection", {0.92, 0.88, 0.88}}, {"PSYA-Sim", {1.00, 0.62, 0.38}},
            {"PSYA-Self", {0.92, 0.85, 0.77}}, {"PSYA-Full", {0.92, 0.69, 0.31}},
        };
        const char* sizes[] = {"2", "3", "6"};
        for (const auto& r : kTable)
            for (std::size_t i = 0; i < 3; ++i) def.references.push_back({r.source, sizes[i], "helped", r.v[i]});
    } else {
        for (const auto& g : p.groups)
            for (const char* role : {"leader", "member"}) def.conditions.push_back(g.label + "/" + role);
        def.metrics.insert(def.metrics.end(), {"leader_orders", "leader_acts", "leader_delegates_only",
                                               "member_immediate", "member_waits", "member_helped"});
        for (const auto& g : p.groups) {
            def.layout.push_back({"Leader orders (" + g.label + ")", g.label + "/leader", "leader_orders"});
            def.layout.push_back({"Leader delegates only (" + g.label + ")", g.label + "/leader", "leader_delegates_only"});
            def.layout.push_back({"Member acts first (" + g.label + ")", g.label + "/member", "member_immediate"});
        }
        def.references = {{"PSYA-Full", "6/leader", "leader_orders", 0.923},
                          {"PSYA-Full", "6/leader", "leader_delegates_only", 0.667},
                          {"PSYA-Full", "6/member", "member_immediate", 0.077}};
    }
    return def;
}

}  // namespace psya::lab
