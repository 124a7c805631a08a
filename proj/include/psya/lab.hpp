#pragma once

// Experiment harness: protocols, subjects, repetitions and result tables for
// the five replicated psychology experiments and their extensions.

#include "psya/affect.hpp"
#include "psya/agent.hpp"
#include "psya/backend.hpp"
#include "psya/clock.hpp"
#include "psya/cognition.hpp"
#include "psya/memory.hpp"
#include "psya/rng.hpp"
#include "psya/stats.hpp"
#include "psya/templates.hpp"

#include <json.hpp>

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace psya::lab {

using json = nlohmann::json;

enum class Ablation { Based, Affection, Sim, Self, Mind, Full };

inline constexpr std::array<Ablation, 6> kAllAblations = {Ablation::Based, Ablation::Affection, Ablation::Sim,
                                                          Ablation::Self,  Ablation::Mind,      Ablation::Full};

std::string_view to_string(Ablation a);
/// Row label used in the tables ("PSYA-Full", "PSYA-Based (GA)", ...).
std::string_view display_name(Ablation a);
/// Throws ConfigurationError for unknown names.
Ablation ablation_from_name(std::string_view name);

/// Which modules an arm switches on. Each arm adds exactly its own module to
/// the GA baseline; full switches on everything.
struct AblationFlags {
    bool layered_affect = false;  // mood and personality layers
    bool show_affect = false;     // emotion state appears in prompts
    std::array<bool, 3> dmn{};    // indexed by DmnFunction
};

AblationFlags flags_for(Ablation a);

enum class Variant { Base, Extended };

std::string_view to_string(Variant v);
Variant variant_from_name(std::string_view name);

struct GroupSpec {
    std::string label;
    int size = 0;
    json params = json::object();
};

struct ExperimentProtocol {
    std::string name;
    Variant variant = Variant::Base;
    Ablation ablation = Ablation::Full;
    /// Arms this protocol may run under; empty means all.
    std::vector<Ablation> ablations;
    int n_agents = 0;
    std::vector<GroupSpec> groups;
    json phases = json::array();
    json params = json::object();
    int repetitions = 10;
    std::uint64_t seed = 7;

    /// Group sizes sum to n_agents, sizes positive, repetitions positive and
    /// the chosen arm allowed. Throws ConfigurationError.
    void validate() const;

    /// Protocol parameter with a default; throws ConfigurationError on a type mismatch.
    template <typename T>
    T param(const std::string& key, T fallback) const {
        if (!params.contains(key)) return fallback;
        try {
            return params.at(key).get<T>();
        } catch (const json::exception& e) {
            throw ConfigurationError("protocol parameter '" + key + "': " + e.what());
        }
    }

    static ExperimentProtocol from_json(const json& j);
    json to_json() const;
    static ExperimentProtocol load(const std::filesystem::path& path);
};

/// <dir>/<name>_<variant>.json
std::filesystem::path protocol_path(const std::filesystem::path& dir, std::string_view name, Variant variant);

inline constexpr std::array<std::string_view, 5> kExperimentNames = {"helplessness", "dissonance", "fitd",
                                                                     "diffusion", "ostracism"};
bool is_experiment(std::string_view name);

// ---------------------------------------------------------------------------
// Results

struct ResultRow {
    std::string condition;
    std::string metric;
    double value = 0.0;
    std::int64_t n = 0;
    bool proportion = false;
};

struct Significance {
    std::string comparison;  // "A vs B"
    std::string metric;
    stats::TestResult result;
};

/// A published number printed next to the simulated one.
struct ReferenceRow {
    std::string source;  // "Human", "PSYA-Full", ...
    std::string condition;
    std::string metric;
    double value = 0.0;
};

struct TableColumn {
    std::string header;
    std::string condition;
    std::string metric;
};

struct ResultTable {
    std::string experiment;
    std::string variant;
    std::string ablation;
    std::string ablation_display;
    std::vector<ResultRow> rows;
    std::vector<Significance> significance;
    std::vector<ReferenceRow> references;
    /// Column layout of the wide table (one row per model).
    std::vector<TableColumn> layout;

    const ResultRow* find(std::string_view condition, std::string_view metric) const;
    /// Proportions in [0, 1] and p-values in [0, 1].
    bool valid() const;

    /// condition,metric,value,n
    std::string long_csv() const;
    /// model,<layout headers>; simulated row first, then references.
    std::string wide_csv() const;
    /// comparison,metric,test,statistic,p,skipped,reason
    std::string significance_csv() const;
};

// ---------------------------------------------------------------------------
// Subjects and sessions

struct Subject {
    AgentProfile profile;
    AffectState affect;
    MemoryStore memory;
    Rng rng;
    std::string group;
    json condition = json::object();
};

/// Emotion bump per named stimulus, e.g. {"noise": {"fear": 0.1, ...}}.
using Injection = std::vector<std::pair<Emotion, double>>;

/// One repetition of an experiment: clock, subjects' shared services and the trial log.
class Session {
public:
    Session(const ExperimentProtocol& protocol, Gateway& gateway, const TemplateLibrary& templates, int repetition);

    const ExperimentProtocol& protocol() const { return protocol_; }
    const AblationFlags& flags() const { return flags_; }
    const AffectParams& affect_params() const { return affect_; }
    const Clock& clock() const { return clock_; }
    Gateway& gateway() { return gateway_; }
    const TemplateLibrary& templates() const { return templates_; }
    int repetition() const { return repetition_; }
    Tick now() const { return now_; }
    Rng& rng() { return rng_; }

    /// Subjects for every group in protocol order; personas are drawn from the session rng.
    std::vector<Subject> make_subjects(const PersonaSpec& base);

    /// persona, name, state and memories (top five relevant to `query`).
    TemplateVars vars(const Subject& s, std::string_view query) const;
    /// Emotion and mood line for prompts; empty for arms without affect.
    std::string state_text(const Subject& s) const;

    std::string choose(Subject& s, std::string_view tmpl, const TemplateVars& vars,
                       const std::vector<std::string>& options);
    /// Ratings parsed from a scores reply; nullopt when the reply stays unparseable after the re-ask.
    std::optional<std::vector<double>> rate(Subject& s, std::string_view tmpl, const TemplateVars& vars, int count);
    json structured(Subject& s, std::string_view tmpl, const TemplateVars& vars, std::string_view schema);
    std::string say(Subject& s, std::string_view tmpl, const TemplateVars& vars);

    /// Named injection from the protocol's "injections" parameter (or the built-in default).
    Injection injection(const std::string& stimulus) const;
    void feel(Subject& s, const Injection& inj, double scale = 1.0);
    void feel(Subject& s, const std::string& stimulus, double scale = 1.0) { feel(s, injection(stimulus), scale); }

    RecordId remember(Subject& s, std::string content, double importance);

    /// Runs each DMN function the arm enables, once, in fixed order.
    void daydream(Subject& s);

    /// Moves the clock and lets every subject's affect decay and accumulate.
    void advance(std::vector<Subject>& subjects, Tick dt);
    /// Decays one subject's affect; the clock is moved separately with tick().
    void advance(Subject& s, Tick dt);
    void tick(Tick dt) { now_ += dt; }

    /// Appends a trial record with the subject's affect snapshot.
    void log(const Subject& s, json record);
    std::vector<json>& trials() { return trials_; }

private:
    const ExperimentProtocol& protocol_;
    Gateway& gateway_;
    const TemplateLibrary& templates_;
    int repetition_;
    AblationFlags flags_;
    AffectParams affect_;
    Clock clock_;
    Tick now_ = 0;
    Rng rng_;
    std::vector<json> trials_;
};

json affect_snapshot(const AffectState& a);

// ---------------------------------------------------------------------------
// Experiments

/// One measured value. Binary metrics carry counts so groups can be pooled.
struct Observation {
    std::string condition;
    std::string metric;
    double value = 0.0;
    std::int64_t successes = 0;
    std::int64_t trials = 0;  // 0: continuous metric
};

struct RepetitionOutcome {
    std::vector<Observation> observations;
    std::vector<json> trials;
};

struct Comparison {
    std::string a;
    std::string b;
    std::string metric;
};

struct ExperimentDefinition {
    std::function<RepetitionOutcome(Session&)> run;
    std::vector<std::string> conditions;  // row order
    std::vector<std::string> metrics;
    std::vector<Comparison> comparisons;
    std::vector<ReferenceRow> references;
    std::vector<TableColumn> layout;
};

ExperimentDefinition helplessness_definition(const ExperimentProtocol& p);
ExperimentDefinition dissonance_definition(const ExperimentProtocol& p);
ExperimentDefinition fitd_definition(const ExperimentProtocol& p);
ExperimentDefinition diffusion_definition(const ExperimentProtocol& p);
ExperimentDefinition ostracism_definition(const ExperimentProtocol& p);

/// Per-repetition means, averaged over repetitions. Binary metrics use the
/// pooled proportion within a repetition.
std::vector<ResultRow> aggregate(const std::vector<std::vector<Observation>>& per_repetition,
                                 const std::vector<std::string>& conditions, const std::vector<std::string>& metrics);

/// Binary metrics: chi-square and Fisher on pooled counts; continuous ones: Welch t.
std::vector<Significance> analyze(const std::vector<std::vector<Observation>>& per_repetition,
                                  const std::vector<Comparison>& comparisons);

struct RunOptions {
    unsigned jobs = 1;
};

struct ExperimentRun {
    ResultTable table;
    std::vector<json> trials;  // repetition order

    /// trials.jsonl, results.csv, table.csv and significance.csv under `dir`.
    void write(const std::filesystem::path& dir) const;
};

ExperimentRun run_experiment(const ExperimentProtocol& protocol, Gateway& gateway, const TemplateLibrary& templates,
                             const RunOptions& options = {});

inline ExperimentRun run_helplessness(const ExperimentProtocol& p, Gateway& g, const TemplateLibrary& t,
                                      const RunOptions& o = {}) {
    return run_experiment(p, g, t, o);
}
inline ExperimentRun run_dissonance(const ExperimentProtocol& p, Gateway& g, const TemplateLibrary& t,
                                    const RunOptions& o = {}) {
    return run_experiment(p, g, t, o);
}
inline ExperimentRun run_fitd(const ExperimentProtocol& p, Gateway& g, const TemplateLibrary& t,
                              const RunOptions& o = {}) {
    return run_experiment(p, g, t, o);
}
inline ExperimentRun run_diffusion(const ExperimentProtocol& p, Gateway& g, const TemplateLibrary& t,
                                   const RunOptions& o = {}) {
    return run_experiment(p, g, t, o);
}
inline ExperimentRun run_ostracism(const ExperimentProtocol& p, Gateway& g, const TemplateLibrary& t,
                                   const RunOptions& o = {}) {
    return run_experiment(p, g, t, o);
}

/// Fixed formatting for CSV numbers: shortest round-trip representation.
std::string format_number(double v);

}  // namespace psya::lab
