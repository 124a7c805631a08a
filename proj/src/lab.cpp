#include "psya/lab.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

namespace psya::lab {

std::string_view to_string(Ablation a) {
    switch (a) {
        case Ablation::Based: return "based";
        case Ablation::Affection: return "affection";
        case Ablation::Sim: return "sim";
        case Ablation::Self: return "self";
        case Ablation::Mind: return "mind";
        case Ablation::Full: return "full";
    }
    return "full";
}

std::string_view display_name(Ablation a) {
    switch (a) {
        case Ablation::Based: return "PSYA-Based (GA)";
        case Ablation::Affection: return "PSYA-Affection";
        case Ablation::Sim: return "PSYA-Sim";
        case Ablation::Self: return "PSYA-Self";
        case Ablation::Mind: return "PSYA-Mind";
        case Ablation::Full: return "PSYA-Full";
    }
    return "PSYA-Full";
}

Ablation ablation_from_name(std::string_view name) {
    for (Ablation a : kAllAblations)
        if (to_string(a) == name) return a;
    if (name == "ga" || name == "base") return Ablation::Based;
    throw ConfigurationError("unknown ablation: " + std::string(name) +
                             " (expected based|affection|sim|self|mind|full)");
}

AblationFlags flags_for(Ablation a) {
    AblationFlags f;
    switch (a) {
        case Ablation::Based: break;
        case Ablation::Affection:
            f.layered_affect = true;
            f.show_affect = true;
            break;
        case Ablation::Sim:
            f.show_affect = true;
            f.dmn[0] = true;
            break;
        case Ablation::Self:
            f.show_affect = true;
            f.dmn[1] = true;
            break;
        case Ablation::Mind:
            f.show_affect = true;
            f.dmn[2] = true;
            break;
        case Ablation::Full:
            f.layered_affect = true;
            f.show_affect = true;
            f.dmn = {true, true, true};
            break;
    }
    return f;
}

std::string_view to_string(Variant v) { return v == Variant::Base ? "base" : "extended"; }

Variant variant_from_name(std::string_view name) {
    if (name == "base") return Variant::Base;
    if (name == "extended") return Variant::Extended;
    throw ConfigurationError("unknown variant: " + std::string(name) + " (expected base|extended)");
}

bool is_experiment(std::string_view name) {
    return std::find(kExperimentNames.begin(), kExperimentNames.end(), name) != kExperimentNames.end();
}

// ---------------------------------------------------------------------------
// Protocols

void ExperimentProtocol::validate() const {
    if (!is_experiment(name)) throw ConfigurationError("unknown experiment: " + name);
    if (n_agents <= 0) throw ConfigurationError(name + ": n_agents must be positive");
    if (repetitions <= 0) throw ConfigurationError(name + ": repetitions must be positive");
    if (groups.empty()) throw ConfigurationError(name + ": no groups");
    int total = 0;
    std::set<std::string> labels;
    for (const auto& g : groups) {
        if (g.size <= 0) throw ConfigurationError(name + ": group '" + g.label + "' has no members");
        if (!labels.insert(g.label).second) throw ConfigurationError(name + ": duplicate group '" + g.label + "'");
        total += g.size;
    }
    if (total != n_agents)
        throw ConfigurationError(name + ": group sizes sum to " + std::to_string(total) + ", expected n_agents " +
                                 std::to_string(n_agents));
    if (!ablations.empty() && std::find(ablations.begin(), ablations.end(), ablation) == ablations.end())
        throw ConfigurationError(name + " (" + std::string(to_string(variant)) + ") does not support ablation '" +
                                 std::string(to_string(ablation)) + "'");
}

ExperimentProtocol ExperimentProtocol::from_json(const json& j) {
    try {
        ExperimentProtocol p;
        p.name = j.at("name").get<std::string>();
        p.variant = variant_from_name(j.value("variant", "base"));
        p.ablation = ablation_from_name(j.value("ablation", "full"));
        for (const auto& a : j.value("ablations", json::array())) p.ablations.push_back(ablation_from_name(a.get<std::string>()));
        p.n_agents = j.at("n_agents").get<int>();
        for (const auto& g : j.at("groups")) {
            GroupSpec spec;
            spec.label = g.at("label").get<std::string>();
            spec.size = g.at("size").get<int>();
            spec.params = g.value("params", json::object());
            p.groups.push_back(std::move(spec));
        }
        p.phases = j.value("phases", json::array());
        p.params = j.value("params", json::object());
        p.repetitions = j.value("repetitions", 10);
        p.seed = j.value("seed", std::uint64_t{7});
        return p;
    } catch (const json::exception& e) {
        throw ConfigurationError(std::string("malformed protocol: ") + e.what());
    }
}

json ExperimentProtocol::to_json() const {
    json groups_j = json::array();
    for (const auto& g : groups) groups_j.push_back({{"label", g.label}, {"size", g.size}, {"params", g.params}});
    json allowed = json::array();
    for (Ablation a : ablations) allowed.push_back(std::string(to_string(a)));
    return {{"name", name},          {"variant", std::string(to_string(variant))},
            {"ablation", std::string(to_string(ablation))},
            {"ablations", allowed},  {"n_agents", n_agents},
            {"groups", groups_j},    {"phases", phases},
            {"params", params},      {"repetitions", repetitions},
            {"seed", seed}};
}

ExperimentProtocol ExperimentProtocol::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigurationError("cannot open protocol: " + path.string());
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded()) throw ConfigurationError("protocol is not valid JSON: " + path.string());
    return from_json(j);
}

std::filesystem::path protocol_path(const std::filesystem::path& dir, std::string_view name, Variant variant) {
    return dir / (std::string(name) + "_" + std::string(to_string(variant)) + ".json");
}

// ---------------------------------------------------------------------------
// Results

std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (v == 0.0) return "0";  // folds -0
    char buf[64];
    auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

namespace {

std::string csv_field(std::string_view s) {
    if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

}  // namespace

const ResultRow* ResultTable::find(std::string_view condition, std::string_view metric) const {
    for (const auto& r : rows)
        if (r.condition == condition && r.metric == metric) return &r;
    return nullptr;
}

bool ResultTable::valid() const {
    for (const auto& r : rows) {
        if (std::isnan(r.value)) return false;
        if (r.proportion && (r.value < 0.0 || r.value > 1.0)) return false;
    }
    for (const auto& s : significance)
        if (!s.result.skipped && !(s.result.p >= 0.0 && s.result.p <= 1.0)) return false;
    return true;
}

std::string ResultTable::long_csv() const {
    std::ostringstream os;
    os << "condition,metric,value,n\n";
    for (const auto& r : rows)
        os << csv_field(r.condition) << ',' << csv_field(r.metric) << ',' << format_number(r.value) << ',' << r.n
           << '\n';
    return os.str();
}

std::string ResultTable::wide_csv() const {
    std::ostringstream os;
    os << "model";
    for (const auto& c : layout) os << ',' << csv_field(c.header);
    os << '\n';
    os << csv_field(ablation_display + " (simulated)");
    for (const auto& c : layout) {
        os << ',';
        if (const auto* r = find(c.condition, c.metric)) os << format_number(r->value);
    }
    os << '\n';
    std::vector<std::string> sources;
    for (const auto& ref : references)
        if (std::find(sources.begin(), sources.end(), ref.source) == sources.end()) sources.push_back(ref.source);
    for (const auto& src : sources) {
        os << csv_field(src);
        for (const auto& c : layout) {
            os << ',';
            for (const auto& ref : references)
                if (ref.source == src && ref.condition == c.condition && ref.metric == c.metric) {
                    os << format_number(ref.value);
                    break;
                }
        }
        os << '\n';
    }
    return os.str();
}

std::string ResultTable::significance_csv() const {
    std::ostringstream os;
    os << "comparison,metric,test,statistic,p,skipped,reason\n";
    for (const auto& s : significance)
        os << csv_field(s.comparison) << ',' << csv_field(s.metric) << ',' << s.result.test << ','
           << (s.result.skipped ? "" : format_number(s.result.statistic)) << ','
           << (s.result.skipped ? "" : format_number(s.result.p)) << ',' << (s.result.skipped ? "true" : "false")
           << ',' << csv_field(s.result.reason) << '\n';
    return os.str();
}

// ---------------------------------------------------------------------------
// Sessions

namespace {

AffectParams affect_params_from(const json& j) {
    AffectParams p;
    if (!j.is_object()) return p;
    p.pull_rate = j.value("pull_rate", p.pull_rate);
    p.push_rate = j.value("push_rate", p.push_rate);
    p.emotion_half_life = j.value("emotion_half_life", p.emotion_half_life);
    p.mood_half_life = j.value("mood_half_life", p.mood_half_life);
    p.mood_weight_base = j.value("mood_weight_base", p.mood_weight_base);
    p.mood_weight_span = j.value("mood_weight_span", p.mood_weight_span);
    if (!p.valid()) throw ConfigurationError("invalid affect parameters in protocol");
    return p;
}

const std::map<std::string, Injection, std::less<>>& default_injections() {
    static const std::map<std::string, Injection, std::less<>> kDefaults = {
        {"noise", {{Emotion::Fear, 0.1}, {Emotion::Sadness, 0.05}, {Emotion::Anger, 0.05}}},
        {"relief", {{Emotion::Happiness, 0.1}}},
        {"tedium", {{Emotion::Disgust, 0.1}, {Emotion::Sadness, 0.05}}},
        {"lie", {{Emotion::Disgust, 0.05}, {Emotion::Fear, 0.05}}},
        {"payment", {{Emotion::Happiness, 0.05}}},
        {"request", {{Emotion::Surprise, 0.05}}},
        {"seizure", {{Emotion::Fear, 0.15}, {Emotion::Surprise, 0.1}}},
        {"excluded", {{Emotion::Sadness, 0.08}}},
        {"received", {{Emotion::Happiness, 0.05}}},
        {"witness", {{Emotion::Sadness, 0.03}}},
    };
    return kDefaults;
}

}  // namespace

json affect_snapshot(const AffectState& a) {
    json emotions = json::object();
    for (Emotion e : kAllEmotions) emotions[std::string(to_string(e))] = a.emotions()[e];
    const auto& m = a.mood();
    return {{"emotions", emotions},
            {"mood", {{"p", m.position.p}, {"a", m.position.a}, {"d", m.position.d}}},
            {"octant", std::string(to_string(m.octant))}};
}

Session::Session(const ExperimentProtocol& protocol, Gateway& gateway, const TemplateLibrary& templates,
                 int repetition)
    : protocol_(protocol),
      gateway_(gateway),
      templates_(templates),
      repetition_(repetition),
      flags_(flags_for(protocol.ablation)),
      affect_(affect_params_from(protocol.params.value("affect", json::object()))),
      rng_(Rng(protocol.seed).fork(static_cast<std::uint64_t>(repetition))) {}

std::vector<Subject> Session::make_subjects(const PersonaSpec& base) {
    std::vector<Subject> out;
    int index = 0;
    for (const auto& g : protocol_.groups) {
        for (int i = 0; i < g.size; ++i, ++index) {
            PersonaSpec spec = base;
            spec.id = protocol_.name + "-" + std::to_string(index + 1);
            Subject s;
            s.profile = generate_persona(spec, rng_);
            if (g.params.contains("beliefs"))
                for (const auto& b : g.params["beliefs"]) s.profile.beliefs.push_back(b.get<std::string>());
            for (const auto& b : protocol_.params.value("beliefs", json::array()))
                s.profile.beliefs.push_back(b.get<std::string>());
            s.affect = AffectState(s.profile.big_five, flags_.layered_affect);
            s.rng = rng_.fork(1000 + static_cast<std::uint64_t>(index));
            s.group = g.label;
            s.condition = g.params;
            out.push_back(std::move(s));
        }
    }
    return out;
}

std::string Session::state_text(const Subject& s) const {
    if (!flags_.show_affect) return {};
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(2);
    os << "How " << s.profile.name << " feels (0 = not at all, 0.5 = neutral, 1 = extremely):";
    for (Emotion e : kAllEmotions) os << ' ' << to_string(e) << ' ' << s.affect.emotions()[e] << (e == Emotion::Surprise ? "." : ",");
    if (flags_.layered_affect) os << " Mood: " << mood_text(s.affect.mood()) << '.';
    return os.str();
}

TemplateVars Session::vars(const Subject& s, std::string_view query) const {
    std::string memories;
    auto relevance = [this](std::string_view q, std::string_view c) { return gateway_.relevance(q, c); };
    for (const auto& r : s.memory.retrieve(query, 5, now_, {}, relevance)) memories += "- " + r.content + "\n";
    if (memories.empty())
        memories = "Nothing relevant comes to mind.";
    else
        memories = "What " + s.profile.name + " remembers:\n" + memories.substr(0, memories.size() - 1);
    return {{"persona", s.profile.describe()},
            {"name", s.profile.name},
            {"state", state_text(s)},
            {"memories", memories}};
}

std::string Session::choose(Subject&, std::string_view tmpl, const TemplateVars& vars,
                            const std::vector<std::string>& options) {
    try {
        const auto resp =
            gateway_.generate(templates_.request(tmpl, vars, ExpectedFormat::choice(options), protocol_.seed));
        return resp.parsed->get<std::string>();
    } catch (const FormatError&) {
        return {};
    }
}

std::optional<std::vector<double>> Session::rate(Subject&, std::string_view tmpl, const TemplateVars& vars,
                                                 int count) {
    try {
        const auto resp =
            gateway_.generate(templates_.request(tmpl, vars, ExpectedFormat::scores(count), protocol_.seed));
        return resp.parsed->get<std::vector<double>>();
    } catch (const FormatError&) {
        return std::nullopt;
    }
}

json Session::structured(Subject&, std::string_view tmpl, const TemplateVars& vars, std::string_view schema) {
    const auto resp = gateway_.generate(
        templates_.request(tmpl, vars, ExpectedFormat::json_schema(std::string(schema)), protocol_.seed));
    return *resp.parsed;
}

std::string Session::say(Subject&, std::string_view tmpl, const TemplateVars& vars) {
    return gateway_.generate(templates_.request(tmpl, vars, ExpectedFormat::freetext(), protocol_.seed)).text;
}

Injection Session::injection(const std::string& stimulus) const {
    const json overrides = protocol_.params.value("injections", json::object());
    if (overrides.contains(stimulus)) {
        Injection out;
        try {
            for (const auto& [name, amount] : overrides[stimulus].items())
                out.emplace_back(emotion_from_name(name), amount.get<double>());
        } catch (const std::exception& e) {
            throw ConfigurationError("injection '" + stimulus + "': " + e.what());
        }
        return out;
    }
    const auto& defaults = default_injections();
    const auto it = defaults.find(stimulus);
    if (it == defaults.end()) throw ConfigurationError("unknown stimulus: " + stimulus);
    return it->second;
}

void Session::feel(Subject& s, const Injection& inj, double scale) {
    // Injections are increments; the engine takes absolute intensities.
    for (const auto& [kind, amount] : inj) {
        const double target = std::clamp(s.affect.emotions()[kind] + amount * scale, 0.0, 1.0);
        s.affect.feel(EmotionEvent{kind, target, now_}, s.profile.big_five, affect_);
    }
}

RecordId Session::remember(Subject& s, std::string content, double importance) {
    FullMemoryRecord r;
    r.tick = now_;
    r.location = "lab";
    r.content = std::move(content);
    r.importance = importance;
    r.emotional_response = s.affect.emotions();
    return s.memory.record_event(std::move(r));
}

void Session::daydream(Subject& s) {
    MindContext ctx{s.profile, s.affect, s.memory, gateway_, templates_, clock_, now_, "lab"};
    for (DmnFunction fn : kAllDmnFunctions) {
        if (!flags_.dmn[static_cast<std::size_t>(fn)]) continue;
        const auto art = run_dmn_function(fn, ctx, {}, s.rng);
        for (const auto& ev : art.events) s.affect.feel(ev, s.profile.big_five, affect_);
        json rec = {{"kind", "dmn"}, {"function", std::string(to_string(fn))}, {"ok", art.ok}, {"text", art.text}};
        if (!art.ok) rec["error"] = art.error;
        log(s, std::move(rec));
    }
}

void Session::advance(Subject& s, Tick dt) {
    s.affect.accumulate(affect_);
    s.affect.settle(static_cast<double>(dt), affect_);
}

void Session::advance(std::vector<Subject>& subjects, Tick dt) {
    for (auto& s : subjects) advance(s, dt);
    now_ += dt;
}

void Session::log(const Subject& s, json record) {
    record["repetition"] = repetition_;
    record["tick"] = now_;
    record["agent"] = s.profile.id;
    record["group"] = s.group;
    record["affect"] = affect_snapshot(s.affect);
    trials_.push_back(std::move(record));
}

// ---------------------------------------------------------------------------
// Aggregation

namespace {

struct Pooled {
    std::vector<double> values;
    std::int64_t successes = 0;
    std::int64_t trials = 0;
    bool binary = false;
};

Pooled pool(const std::vector<Observation>& obs, std::string_view condition, std::string_view metric) {
    Pooled p;
    for (const auto& o : obs) {
        if (o.condition != condition || o.metric != metric) continue;
        p.values.push_back(o.value);
        if (o.trials > 0) {
            p.binary = true;
            p.successes += o.successes;
            p.trials += o.trials;
        }
    }
    return p;
}

}  // namespace

std::vector<ResultRow> aggregate(const std::vector<std::vector<Observation>>& per_repetition,
                                 const std::vector<std::string>& conditions, const std::vector<std::string>& metrics) {
    std::vector<ResultRow> rows;
    for (const auto& c : conditions)
        for (const auto& m : metrics) {
            ResultRow row{c, m, 0.0, 0, false};
            double sum = 0.0;
            int reps = 0;
            for (const auto& obs : per_repetition) {
                const auto p = pool(obs, c, m);
                if (p.values.empty()) continue;
                row.n += static_cast<std::int64_t>(p.values.size());
                if (p.binary) {
                    row.proportion = true;
                    sum += static_cast<double>(p.successes) / static_cast<double>(p.trials);
                } else {
                    sum += stats::mean(p.values);
                }
                ++reps;
            }
            if (reps == 0) continue;
            row.value = sum / reps;
            rows.push_back(std::move(row));
        }
    return rows;
}

std::vector<Significance> analyze(const std::vector<std::vector<Observation>>& per_repetition,
                                  const std::vector<Comparison>& comparisons) {
    std::vector<Significance> out;
    for (const auto& cmp : comparisons) {
        Pooled a, b;
        for (const auto& obs : per_repetition) {
            auto pa = pool(obs, cmp.a, cmp.metric);
            auto pb = pool(obs, cmp.b, cmp.metric);
            a.values.insert(a.values.end(), pa.values.begin(), pa.values.end());
            b.values.insert(b.values.end(), pb.values.begin(), pb.values.end());
            a.successes += pa.successes;
            a.trials += pa.trials;
            b.successes += pb.successes;
            b.trials += pb.trials;
            a.binary = a.binary || pa.binary;
            b.binary = b.binary || pb.binary;
        }
        const std::string label = cmp.a + " vs " + cmp.b;
        if (a.values.empty() || b.values.empty()) {
            stats::TestResult r;
            r.test = a.binary || b.binary ? "chi-square" : "welch-t";
            r.skipped = true;
            r.reason = "no observations";
            out.push_back({label, cmp.metric, r});
            continue;
        }
        if (a.binary && b.binary) {
            stats::Table2x2 t;
            t.n = {{{a.successes, a.trials - a.successes}, {b.successes, b.trials - b.successes}}};
            out.push_back({label, cmp.metric, stats::chi_square_2x2(t)});
            bool small = false;
            for (const auto& row : t.n)
                for (auto cell : row) small = small || cell < 20;
            if (small) out.push_back({label, cmp.metric, stats::fisher_exact_2x2(t)});
        } else {
            out.push_back({label, cmp.metric, stats::welch_t_test(a.values, b.values)});
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Running

void ExperimentRun::write(const std::filesystem::path& dir) const {
    std::filesystem::create_directories(dir);
    auto put = [&](const std::string& name, const std::string& text) {
        std::ofstream out(dir / name, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write " + (dir / name).string());
        out << text;
    };
    std::string lines;
    for (const auto& t : trials) lines += t.dump() + "\n";
    put("trials.jsonl", lines);
    put("results.csv", table.long_csv());
    put("table.csv", table.wide_csv());
    put("significance.csv", table.significance_csv());
}

namespace {

ExperimentDefinition definition_for(const ExperimentProtocol& p) {
    if (p.name == "helplessness") return helplessness_definition(p);
    if (p.name == "dissonance") return dissonance_definition(p);
    if (p.name == "fitd") return fitd_definition(p);
    if (p.name == "diffusion") return diffusion_definition(p);
    if (p.name == "ostracism") return ostracism_definition(p);
    throw ConfigurationError("unknown experiment: " + p.name);
}

}  // namespace

ExperimentRun run_experiment(const ExperimentProtocol& protocol, Gateway& gateway, const TemplateLibrary& templates,
                             const RunOptions& options) {
    protocol.validate();
    const auto def = definition_for(protocol);
    const int reps = protocol.repetitions;
    std::vector<RepetitionOutcome> outcomes(static_cast<std::size_t>(reps));
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(reps));

    std::atomic<int> next{0};
    auto worker = [&] {
        for (int r = next++; r < reps; r = next++) {
            try {
                Session session(protocol, gateway, templates, r);
                auto out = def.run(session);
                if (out.trials.empty()) out.trials = std::move(session.trials());
                outcomes[static_cast<std::size_t>(r)] = std::move(out);
            } catch (...) {
                errors[static_cast<std::size_t>(r)] = std::current_exception();
            }
        }
    };
    const unsigned jobs = std::clamp<unsigned>(options.jobs, 1u, static_cast<unsigned>(reps));
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned i = 0; i < jobs; ++i) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);

    ExperimentRun run;
    std::vector<std::vector<Observation>> per_rep;
    for (auto& o : outcomes) {
        per_rep.push_back(std::move(o.observations));
        for (auto& t : o.trials) run.trials.push_back(std::move(t));
    }
    auto& table = run.table;
    table.experiment = protocol.name;
    table.variant = std::string(to_string(protocol.variant));
    table.ablation = std::string(to_string(protocol.ablation));
    table.ablation_display = std::string(display_name(protocol.ablation));
    table.rows = aggregate(per_rep, def.conditions, def.metrics);
    table.significance = analyze(per_rep, def.comparisons);
    table.references = def.references;
    table.layout = def.layout;
    return run;
}

}  // namespace psya::lab
