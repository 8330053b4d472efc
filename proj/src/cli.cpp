#include "lcsbench/cli.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <regex>

#include "lcsbench/config.hpp"
#include "lcsbench/error.hpp"
#include "lcsbench/execution.hpp"
#include "lcsbench/harness.hpp"
#include "lcsbench/oracle.hpp"

namespace lcsbench {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CommonOptions {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::optional<int> trials;
    std::optional<int> workers;
    std::optional<int> epochs;
    std::optional<int> zReps;
    std::string systems;
    std::string envs;
    bool serial = false;
};

ExperimentConfig resolveConfig(const CommonOptions& o) {
    ExperimentConfig cfg = o.config.empty() ? ExperimentConfig() : ExperimentConfig::load(o.config);
    auto& h = cfg.harness;
    if (o.seed) h.seed = *o.seed;
    if (o.trials) {
        if (*o.trials < 1) throw ConfigError("--trials must be positive");
        h.trials = *o.trials;
    }
    if (o.epochs) {
        if (*o.epochs < 1) throw ConfigError("--epochs must be positive");
        h.epochs = *o.epochs;
    }
    if (o.zReps) {
        if (*o.zReps < 1) throw ConfigError("--z-reps must be positive");
        h.zReps = *o.zReps;
    }
    if (o.workers) {
        if (*o.workers < 0) throw ConfigError("--workers must be non-negative");
        h.workers = *o.workers;
    }
    if (!o.systems.empty()) h.systems = parseSystemList(o.systems);
    if (!o.envs.empty()) {
        const EnvSpec base = cfg.envs.front();
        cfg.envs = parseEnvList(o.envs);
        for (auto& e : cfg.envs) {
            e.gamma = base.gamma;
            e.tMax = base.tMax;
        }
    }
    cfg.validate();
    return cfg;
}

fs::path outputDir(const std::string& flag) {
    if (!flag.empty()) return flag;
    if (const char* env = std::getenv("LCS_BENCH_OUT"); env && *env) return env;
    throw ConfigError("no output directory: pass --out or set LCS_BENCH_OUT");
}

void ensureDir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw std::runtime_error("cannot create " + dir.string() + ": " + ec.message());
}

void writeText(const fs::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    f << text;
    if (!f.flush()) throw std::runtime_error("error while writing " + path.string());
}

int cmdRun(const CommonOptions& o, std::ostream& out, std::ostream& err) {
    const auto cfg = resolveConfig(o);
    const fs::path dir = outputDir(o.out);
    ensureDir(dir);
    setWorkerCount(cfg.harness.workers);
    const auto exec = o.serial ? Execution::Serial : Execution::Parallel;
    err << "lcsbench run: " << cfg.envs.size() << " env(s), " << cfg.harness.systems.size() << " system(s), "
        << cfg.harness.trials << " trial(s), " << cfg.harness.epochs << " epochs, " << workerCount()
        << " worker(s), config " << cfg.hash() << '\n';
    const auto results = runExperiment(cfg, exec, &err);
    exportResults(results, cfg, dir);
    for (const auto& [env, systems] : ftpTable(results.trials))
        for (const auto& [system, xs] : systems)
            out << env << ' ' << system << " ftp " << std::fixed << std::setprecision(3) << mean(xs) << " +- "
                << sampleStd(xs) << " (" << xs.size() << " trials)\n";
    out << "results written to " << dir.string() << '\n';
    return 0;
}

json gridOf(int m, const std::function<json(const State&)>& cell) {
    json g = json::array();
    for (int y = 0; y < m; ++y) {
        json row = json::array();
        for (int x = 0; x < m; ++x) row.push_back(cell({x, y}));
        g.push_back(std::move(row));
    }
    return g;
}

int cmdOracle(const CommonOptions& o, std::ostream& out, std::ostream&) {
    const auto cfg = resolveConfig(o);
    setWorkerCount(cfg.harness.workers);
    json envs = json::array();
    for (const auto& spec : cfg.envs) {
        const FrozenLake env = spec.build();
        const auto vi = valueIteration(env, 1e-10, o.serial ? Execution::Serial : Execution::Parallel);
        const auto z = buildTestSequence(env, cfg.harness.zReps);
        const auto otp = computeOtp(env, z, deriveSeed(cfg.harness.seed, {0x07b0ULL, fnv1a64(spec.label())}), &vi);
        const int m = env.gridSize();
        const auto terminal = [&](const State& s) { return env.isTerminal(s); };
        json starts = json::array();
        for (const auto& [s, g] : otp.perStartReturns) starts.push_back({{"state", {s.x, s.y}}, {"return", g}});
        envs.push_back({
            {"env", spec.label()},
            {"grid_size", m},
            {"p_slip", env.pSlip()},
            {"gamma", env.gamma()},
            {"t_max", env.tMax()},
            {"sweeps", vi.sweeps},
            {"residual", vi.residual},
            {"v", gridOf(m, [&](const State& s) { return terminal(s) ? json(nullptr) : json(vi.q.value(s)); })},
            {"q", gridOf(m,
                         [&](const State& s) {
                             return terminal(s) ? json(nullptr) : json(vi.q.row(s));
                         })},
            {"policy", gridOf(m,
                              [&](const State& s) {
                                  return terminal(s) ? json(nullptr) : json(std::string(actionName(vi.q.greedy(s))));
                              })},
            {"z_length", z.size()},
            {"otp", otp.otp},
            {"otp_exact", otp.exact},
            {"per_start", std::move(starts)},
        });
    }
    const json doc{{"meta", ExportHeader{cfg.hash(), cfg.harness.seed}.toJson()}, {"environments", std::move(envs)}};
    if (o.out.empty()) {
        out << doc.dump(2) << '\n';
    } else {
        const fs::path path(o.out);
        if (path.has_parent_path()) ensureDir(path.parent_path());
        writeText(path, doc.dump(2) + "\n");
        out << "oracle written to " << path.string() << '\n';
    }
    return 0;
}

ExportHeader headerFromSnapshot(const json& snap) {
    ExportHeader h{"unknown", 0};
    if (snap.contains("meta") && snap["meta"].is_object()) {
        h.configHash = snap["meta"].value("config_hash", std::string("unknown"));
        h.seed = snap["meta"].value("seed", std::uint64_t{0});
    }
    return h;
}

int cmdAnalyze(const std::vector<std::string>& inputs, const std::string& outFlag, std::ostream& out) {
    const fs::path dir = outputDir(outFlag);
    std::vector<fs::path> files;
    std::vector<bool> explicitFile;
    for (const auto& in : inputs) {
        const fs::path p(in);
        if (fs::is_directory(p)) {
            std::vector<fs::path> found;
            for (const auto& entry : fs::directory_iterator(p))
                if (entry.is_regular_file() && entry.path().extension() == ".json") found.push_back(entry.path());
            std::sort(found.begin(), found.end());
            for (auto& f : found) {
                files.push_back(std::move(f));
                explicitFile.push_back(false);
            }
        } else if (fs::is_regular_file(p)) {
            files.push_back(p);
            explicitFile.push_back(true);
        } else {
            throw ConfigError("snapshot not found: " + p.string());
        }
    }
    if (files.empty()) throw ConfigError("no snapshot files given");
    ensureDir(dir);
    int written = 0;
    for (std::size_t i = 0; i < files.size(); ++i) {
        std::ifstream f(files[i]);
        if (!f) throw ConfigError("cannot open " + files[i].string());
        json snap;
        try {
            snap = json::parse(f);
        } catch (const json::exception& e) {
            throw ConfigError(files[i].string() + ": " + e.what());
        }
        if (!explicitFile[i]) {
            const std::string system = snap.is_object() ? snap.value("system", std::string()) : std::string();
            if (system != "ppl-st" && system != "xcs") continue;
        }
        BestActionMapStats stats;
        try {
            stats = analyzeSnapshot(snap);
        } catch (const ConfigError& e) {
            throw ConfigError(files[i].string() + ": " + e.what());
        }
        const ExportHeader h = headerFromSnapshot(snap);
        const std::string stem = files[i].stem().string();
        json doc = bestActionMapJson(stats);
        doc["meta"] = h.toJson();
        doc["snapshot"] = files[i].filename().string();
        doc["system"] = snap.value("system", std::string());
        doc["env"] = snap.value("env", std::string());
        writeText(dir / (stem + ".bam.json"), doc.dump(2) + "\n");
        writeDensityCsv(dir / (stem + ".density.csv"), stats, h);
        out << stem << ": |R|=" << stats.rulesetSize << " |R_BA|=" << stats.bamSize << '\n';
        ++written;
    }
    if (written == 0) throw ConfigError("no PPL-ST or XCS snapshots among the inputs");
    return 0;
}

ExportHeader headerFromCsv(const fs::path& path) {
    ExportHeader h{"unknown", 0};
    std::ifstream in(path);
    std::string first;
    std::getline(in, first);
    static const std::regex re(R"(^# lcsbench \S+ config_hash=(\S+) seed=(\d+))");
    std::smatch m;
    if (std::regex_search(first, m, re)) {
        h.configHash = m[1].str();
        h.seed = std::stoull(m[2].str());
    }
    return h;
}

int cmdStats(const std::string& input, const std::string& outFlag, std::ostream& out) {
    fs::path csv(input);
    if (fs::is_directory(csv)) csv /= "epochs.csv";
    if (!fs::exists(csv)) throw ConfigError("epochs file not found: " + csv.string());
    const fs::path dir = outFlag.empty() && !std::getenv("LCS_BENCH_OUT") ? csv.parent_path() : outputDir(outFlag);
    const auto table = ftpTable(readEpochsCsv(csv));
    const auto comparisons = compareFtp(table);
    const ExportHeader h = headerFromCsv(csv);
    ensureDir(dir.empty() ? fs::path(".") : dir);
    writeFtpSummaryCsv(dir / "ftp_summary.csv", table, h);
    writeSignificanceCsv(dir / "significance.csv", comparisons, h);
    for (const auto& c : comparisons)
        out << c.env << " ppl-st " << verdictSymbol(c.verdict) << ' ' << c.other << "  (p = " << std::setprecision(4)
            << c.test.pTwoSided << ", alpha = " << c.alpha << ")\n";
    return 0;
}

void addRunOptions(CLI::App* cmd, CommonOptions& o, bool experiment) {
    cmd->add_option("--config", o.config, "Experiment config file ([env], [ppl], [xcs], [harness])");
    cmd->add_option("--seed", o.seed, "Master seed");
    cmd->add_option("--envs", o.envs, "Environment list, e.g. 4:0,4:0.3");
    cmd->add_option("--z-reps", o.zReps, "Test sequence repetitions for stochastic environments");
    cmd->add_option("--workers", o.workers, "Worker threads (0 = available parallelism)");
    cmd->add_flag("--serial", o.serial, "Use the serial reference kernels");
    if (experiment) {
        cmd->add_option("--out", o.out, "Output directory (falls back to LCS_BENCH_OUT)");
        cmd->add_option("--trials", o.trials, "Trials per system and environment");
        cmd->add_option("--epochs", o.epochs, "Epochs per trial");
        cmd->add_option("--systems", o.systems, "Systems to run: xcs, ppl-dl, ppl-st");
    } else {
        cmd->add_option("--out", o.out, "Output JSON file (stdout when omitted)");
    }
}

}  // namespace

int runCli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Benchmark lab for Pittsburgh and Michigan learning classifier systems on FrozenLake", "lcsbench"};
    app.set_version_flag("--version", std::string(toolVersion()));
    app.require_subcommand(1);

    CommonOptions runOpts;
    auto* run = app.add_subcommand("run", "Run the configured (system x env x trial) grid and export results");
    addRunOptions(run, runOpts, true);

    CommonOptions oracleOpts;
    auto* oracle = app.add_subcommand("oracle", "Value iteration, optimal policy and OTP as JSON");
    addRunOptions(oracle, oracleOpts, false);

    std::vector<std::string> snapshots;
    std::string analyzeOut;
    auto* analyze = app.add_subcommand("analyze", "Best action map statistics of stored snapshots");
    analyze->add_option("snapshots", snapshots, "Snapshot files or directories")->required();
    analyze->add_option("--out", analyzeOut, "Output directory (falls back to LCS_BENCH_OUT)");

    std::string statsIn;
    std::string statsOut;
    auto* stats = app.add_subcommand("stats", "FTP summary and significance table from epochs.csv");
    stats->add_option("--in", statsIn, "epochs.csv or a run output directory")->required();
    stats->add_option("--out", statsOut, "Output directory (defaults to the input directory)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*run) return cmdRun(runOpts, out, err);
        if (*oracle) return cmdOracle(oracleOpts, out, err);
        if (*analyze) return cmdAnalyze(snapshots, analyzeOut, out);
        if (*stats) return cmdStats(statsIn, statsOut, out);
    } catch (const ConfigError& e) {
        err << "lcsbench: configuration error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        err << "lcsbench: error: " << e.what() << '\n';
        return 1;
    }
    return 2;
}

}  // namespace lcsbench
