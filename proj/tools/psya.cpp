// psya: daily-life simulation, lab experiments, reports.
#include "psya/lab.hpp"
#include "psya/world.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <thread>

namespace fs = std::filesystem;
using psya::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitBackend = 3;

struct BackendOptions {
    std::string kind = "scripted";
    std::string script;
    std::string transcript;
    std::string record;
    std::string base_url = psya::HttpConfig{}.base_url;
    std::string model = psya::HttpConfig{}.model;
    std::string api_key_env = psya::HttpConfig{}.api_key_env;
    int max_in_flight = psya::HttpConfig{}.max_in_flight;
};

void add_backend_flags(CLI::App& cmd, BackendOptions& b) {
    cmd.add_option("--backend", b.kind, "Text backend: scripted, replay or http")
        ->check(CLI::IsMember({"scripted", "replay", "http"}))
        ->capture_default_str();
    cmd.add_option("--script", b.script, "Scripted backend: JSON rules file {\"rules\": [...]}");
    cmd.add_option("--transcript", b.transcript, "Replay backend: transcript (JSON Lines) to answer from");
    cmd.add_option("--record", b.record, "Record every response into this transcript file");
    cmd.add_option("--base-url", b.base_url, "HTTP backend: server base URL")->capture_default_str();
    cmd.add_option("--model", b.model, "HTTP backend: model name")->capture_default_str();
    cmd.add_option("--api-key-env", b.api_key_env, "HTTP backend: environment variable holding the API key")
        ->capture_default_str();
    cmd.add_option("--max-in-flight", b.max_in_flight, "HTTP backend: concurrent request cap")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
}

json read_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw psya::ConfigurationError("cannot read " + path.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw psya::ConfigurationError(path.string() + ": " + e.what());
    }
}

std::shared_ptr<psya::TextEngine> make_engine(const BackendOptions& b) {
    if (b.kind == "scripted") {
        std::vector<psya::ScriptRule> rules;
        if (!b.script.empty()) rules = psya::ScriptedEngine::rules_from_json(read_json(b.script));
        return std::make_shared<psya::ScriptedEngine>(std::move(rules));
    }
    if (b.kind == "replay") {
        if (b.transcript.empty()) throw psya::ConfigurationError("--backend replay needs --transcript");
        return std::make_shared<psya::ReplayEngine>(
            std::make_shared<const psya::Transcript>(psya::Transcript::load(b.transcript)));
    }
    psya::HttpConfig cfg;
    cfg.base_url = b.base_url;
    cfg.model = b.model;
    cfg.api_key_env = b.api_key_env;
    cfg.max_in_flight = b.max_in_flight;
    return std::make_shared<psya::HttpEngine>(cfg);
}

struct Backend {
    psya::Gateway gateway;
    std::shared_ptr<psya::Transcript> recording;
    fs::path record_path;

    explicit Backend(const BackendOptions& b) : gateway(make_engine(b)) {
        if (!b.record.empty()) {
            recording = std::make_shared<psya::Transcript>();
            recording->meta = {gateway.engine().name(), gateway.engine().model(), ""};
            gateway.record_into(recording);
            record_path = b.record;
        }
    }
    // Saved even when the run dies half way, so a partial recording can be replayed.
    ~Backend() {
        if (!recording) return;
        try {
            recording->save(record_path);
        } catch (const std::exception& e) {
            std::cerr << "psya: cannot save transcript: " << e.what() << "\n";
        }
    }
};

psya::TemplateLibrary load_templates(const std::string& dir) {
    psya::TemplateLibrary t;
    if (!dir.empty()) t.load_overrides(dir);
    return t;
}

// ---------------------------------------------------------------------------
// report

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    bool quoted = false;
    for (char c : line) {
        if (c == '"') {
            quoted = !quoted;
        } else if (c == ',' && !quoted) {
            out.push_back(cell);
            cell.clear();
        } else {
            cell.push_back(c);
        }
    }
    out.push_back(cell);
    return out;
}

const std::vector<std::string> kAffectColumns = {"happiness", "sadness", "anger", "fear",   "surprise",
                                                 "disgust",   "mood_p",  "mood_a", "mood_d"};

std::string dat_header(const std::string& x) {
    std::string h = "# " + x;
    for (const auto& c : kAffectColumns) h += " " + c;
    return h + "\n";
}

void write_gnuplot(const fs::path& dir, const std::vector<std::string>& series, const std::string& xlabel) {
    std::ofstream gp(dir / "plot.gp");
    gp << "set terminal pngcairo size 1200,700\nset xlabel '" << xlabel << "'\nset key outside\n";
    for (const auto& s : series) {
        gp << "set output '" << s << "_emotions.png'\nplot";
        for (std::size_t i = 0; i < 6; ++i)
            gp << (i ? ", " : " ") << "'" << s << ".dat' using 1:" << i + 2 << " with lines title '"
               << kAffectColumns[i] << "'";
        gp << "\nset output '" << s << "_mood.png'\nplot";
        for (std::size_t i = 6; i < 9; ++i)
            gp << (i > 6 ? ", " : " ") << "'" << s << ".dat' using 1:" << i + 2 << " with lines title '"
               << kAffectColumns[i] << "'";
        gp << "\n";
    }
}

// Daily run: one .dat per agent from summary.csv, plus per-agent means.
int report_daily(const fs::path& in, const fs::path& out) {
    std::ifstream csv(in / "summary.csv");
    std::string line;
    if (!std::getline(csv, line)) throw psya::ConfigurationError("empty summary.csv in " + in.string());
    const auto header = split_csv(line);
    auto col = [&](const std::string& name) {
        const auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) throw psya::ConfigurationError("summary.csv has no column " + name);
        return static_cast<std::size_t>(it - header.begin());
    };
    const auto tick_col = col("tick");
    const auto agent_col = col("agent");
    std::vector<std::size_t> cols;
    for (const auto& c : kAffectColumns) cols.push_back(col(c));

    std::map<std::string, std::ostringstream> dat;
    std::map<std::string, std::pair<std::vector<double>, int>> sums;
    while (std::getline(csv, line)) {
        if (line.empty()) continue;
        const auto cells = split_csv(line);
        if (cells.size() != header.size()) throw psya::ConfigurationError("ragged row in summary.csv: " + line);
        auto& os = dat[cells[agent_col]];
        auto& [sum, n] = sums[cells[agent_col]];
        sum.resize(cols.size());
        os << cells[tick_col];
        for (std::size_t i = 0; i < cols.size(); ++i) {
            os << " " << cells[cols[i]];
            sum[i] += std::stod(cells[cols[i]]);
        }
        os << "\n";
        ++n;
    }
    std::vector<std::string> names;
    for (const auto& [agent, os] : dat) {
        std::ofstream f(out / (agent + ".dat"));
        f << dat_header("tick") << os.str();
        names.push_back(agent);
    }
    std::ofstream means(out / "agent_means.csv");
    means << "agent";
    for (const auto& c : kAffectColumns) means << "," << c;
    means << "\n";
    for (const auto& [agent, s] : sums) {
        means << agent;
        for (double v : s.first) means << "," << psya::lab::format_number(v / s.second);
        means << "\n";
    }
    write_gnuplot(out, names, "tick");
    std::cout << "report: " << names.size() << " agent series written to " << out.string() << "\n";
    return kExitOk;
}

// Experiment run: per-group affect averaged over agents and repetitions at each
// logged step (the n-th record of an agent), plus the result tables.
int report_experiment(const fs::path& in, const fs::path& out) {
    std::ifstream trials(in / "trials.jsonl");
    struct Acc {
        std::vector<double> sum = std::vector<double>(9, 0.0);
        int n = 0;
    };
    std::map<std::string, std::map<std::size_t, Acc>> groups;
    std::map<std::tuple<int, std::string>, std::size_t> steps;
    std::string line;
    std::size_t records = 0;
    while (std::getline(trials, line)) {
        if (line.empty()) continue;
        json r;
        try {
            r = json::parse(line);
        } catch (const json::exception& e) {
            throw psya::ConfigurationError("trials.jsonl: " + std::string(e.what()));
        }
        if (!r.contains("affect")) continue;
        const auto& a = r["affect"];
        const std::size_t step = steps[{r.value("repetition", 0), r.value("agent", "")}]++;
        auto& acc = groups[r.value("group", "all")][step];
        for (std::size_t i = 0; i < 6; ++i) acc.sum[i] += a["emotions"].value(kAffectColumns[i], 0.0);
        acc.sum[6] += a["mood"].value("p", 0.0);
        acc.sum[7] += a["mood"].value("a", 0.0);
        acc.sum[8] += a["mood"].value("d", 0.0);
        ++acc.n;
        ++records;
    }
    std::vector<std::string> names;
    for (const auto& [group, by_step] : groups) {
        std::string file = group;
        for (auto& c : file)
            if (!std::isalnum(static_cast<unsigned char>(c))) c = '_';
        std::ofstream f(out / (file + ".dat"));
        f << dat_header("step");
        for (const auto& [step, acc] : by_step) {
            f << step;
            for (double v : acc.sum) f << " " << psya::lab::format_number(v / acc.n);
            f << "\n";
        }
        names.push_back(file);
    }
    for (const char* t : {"table.csv", "results.csv", "significance.csv"})
        if (fs::exists(in / t)) fs::copy_file(in / t, out / t, fs::copy_options::overwrite_existing);
    write_gnuplot(out, names, "logged step");
    std::cout << "report: " << records << " records, " << names.size() << " group series written to "
              << out.string() << "\n";
    return kExitOk;
}

int report(const std::string& in_dir, const std::string& out_dir) {
    const fs::path in = in_dir;
    if (!fs::is_directory(in)) throw psya::ConfigurationError("not a directory: " + in_dir);
    const fs::path out = out_dir.empty() ? in / "report" : fs::path(out_dir);
    fs::create_directories(out);
    if (fs::exists(in / "summary.csv")) return report_daily(in, out);
    if (fs::exists(in / "trials.jsonl")) return report_experiment(in, out);
    throw psya::ConfigurationError(in_dir + " has neither summary.csv nor trials.jsonl");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"PSYA generative agents: daily-life simulation and psychology-lab experiments"};
    app.require_subcommand(1);

    BackendOptions sim_backend, exp_backend;
    std::string templates_dir;
    app.add_option("--templates", templates_dir, "Directory of *.txt prompt templates overriding the built-ins");

    // simulate daily
    auto* simulate = app.add_subcommand("simulate", "Run a simulation");
    simulate->require_subcommand(1);
    auto* daily = simulate->add_subcommand("daily", "Daily-life town simulation");
    std::string config_path, sim_out = "out/daily";
    std::uint64_t sim_seed = 7;
    psya::Tick ticks = 72;
    daily->add_option("--config", config_path, "Run configuration (JSON)")->required()->check(CLI::ExistingFile);
    auto* seed_opt = daily->add_option("--seed", sim_seed, "Seed; overrides the configuration's seed")
                         ->capture_default_str();
    daily->add_option("--ticks", ticks, "Ticks to simulate")->check(CLI::PositiveNumber)->capture_default_str();
    daily->add_option("--out", sim_out, "Output directory")->capture_default_str();
    add_backend_flags(*daily, sim_backend);

    // experiment run
    auto* experiment = app.add_subcommand("experiment", "Psychology-lab experiments");
    experiment->require_subcommand(1);
    auto* run = experiment->add_subcommand("run", "Run one experiment");
    std::string name, ablation, variant = "base", exp_out, protocols_dir = std::string(PSYA_DATA_DIR) + "/protocols";
    int repetitions = 0;
    std::uint64_t exp_seed = 7;
    unsigned jobs = std::max(1u, std::thread::hardware_concurrency());
    run->add_option("name", name, "helplessness, dissonance, fitd, diffusion or ostracism")->required();
    run->add_option("--ablation", ablation, "based, affection, sim, self, mind or full (default: protocol's)");
    run->add_option("--variant", variant, "base or extended")->capture_default_str();
    auto* reps_opt = run->add_option("--repetitions", repetitions, "Repetitions (default: protocol's)")
                         ->check(CLI::PositiveNumber);
    auto* exp_seed_opt = run->add_option("--seed", exp_seed, "Seed (default: protocol's)");
    run->add_option("--jobs", jobs, "Repetitions run in parallel")->check(CLI::PositiveNumber)->capture_default_str();
    run->add_option("--protocols", protocols_dir, "Directory of <name>_<variant>.json protocols")
        ->capture_default_str();
    run->add_option("--protocol", config_path, "Protocol file; overrides --protocols");
    run->add_option("--out", exp_out, "Output directory (default: out/<name>_<variant>_<ablation>)");
    add_backend_flags(*run, exp_backend);

    // report
    auto* rep = app.add_subcommand("report", "Render CSV tables and gnuplot data from a run directory");
    std::string in_dir, report_out;
    rep->add_option("--in", in_dir, "Directory written by simulate or experiment")->required();
    rep->add_option("--out", report_out, "Output directory (default: <in>/report)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (daily->parsed()) {
            json cfg = read_json(config_path);
            if (seed_opt->count() || !cfg.contains("seed")) cfg["seed"] = sim_seed;
            const auto config = psya::WorldConfig::from_json(cfg);
            const auto templates = load_templates(templates_dir);
            Backend backend(sim_backend);
            psya::run_daily(config, backend.gateway, templates, ticks, sim_out);
            std::cout << "simulate: " << ticks << " ticks, " << config.agents.size() << " agents -> " << sim_out
                      << "\n";
            return kExitOk;
        }
        if (run->parsed()) {
            if (!psya::lab::is_experiment(name))
                throw psya::ConfigurationError("unknown experiment '" + name +
                                               "'; expected helplessness, dissonance, fitd, diffusion or ostracism");
            const auto v = psya::lab::variant_from_name(variant);
            auto protocol = psya::lab::ExperimentProtocol::load(
                config_path.empty() ? psya::lab::protocol_path(protocols_dir, name, v) : fs::path(config_path));
            if (protocol.name != name)
                throw psya::ConfigurationError("protocol is for '" + protocol.name + "', not '" + name + "'");
            if (!ablation.empty()) protocol.ablation = psya::lab::ablation_from_name(ablation);
            if (reps_opt->count()) protocol.repetitions = repetitions;
            if (exp_seed_opt->count()) protocol.seed = exp_seed;
            protocol.validate();
            if (exp_out.empty())
                exp_out = "out/" + name + "_" + std::string(psya::lab::to_string(protocol.variant)) + "_" +
                          std::string(psya::lab::to_string(protocol.ablation));
            const auto templates = load_templates(templates_dir);
            Backend backend(exp_backend);
            const auto result = psya::lab::run_experiment(protocol, backend.gateway, templates, {jobs});
            result.write(exp_out);
            std::cout << result.table.wide_csv();
            return kExitOk;
        }
        if (rep->parsed()) return report(in_dir, report_out);
    } catch (const psya::ConfigurationError& e) {
        std::cerr << "psya: configuration error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const psya::BackendUnavailableError& e) {
        std::cerr << "psya: backend unavailable: " << e.what() << "\n";
        return kExitBackend;
    } catch (const psya::ReplayMissError& e) {
        std::cerr << "psya: " << e.what() << "\n";
        return kExitBackend;
    } catch (const std::exception& e) {
        std::cerr << "psya: " << e.what() << "\n";
        return 1;
    }
    return kExitConfig;
}
