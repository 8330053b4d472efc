#include "lcsbench/harness.hpp"

#include <algorithm>
#include <charconv>
#include <cstring>
#include <exception>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "lcsbench/error.hpp"

namespace lcsbench {

using nlohmann::json;

std::string_view toolVersion() noexcept { return LCSBENCH_VERSION; }

std::uint64_t episodesPerGen(std::uint64_t popSize, std::uint64_t numReinfRollouts, std::uint64_t zLen) noexcept {
    return popSize * (numReinfRollouts + zLen);
}

int epochSize(int pplPopSize) {
    if (pplPopSize <= 0 || pplPopSize % 2 != 0)
        throw ConfigError("PPL popSize must be positive and even, got " + std::to_string(pplPopSize));
    return pplPopSize / 2;
}

namespace {

BestActionMapStats emptyStats(const FrozenLake& env) {
    BestActionMapStats st;
    st.gridSize = env.gridSize();
    st.density.assign(static_cast<std::size_t>(st.gridSize * st.gridSize), std::nullopt);
    return st;
}

std::size_t cellIndex(const State& s, int m) { return static_cast<std::size_t>(s.y * m + s.x); }

}  // namespace

BestActionMapStats bestActionMap(const StIndividual& idv, const FrozenLake& env, double x0) {
    auto st = emptyStats(env);
    st.rulesetSize = static_cast<int>(idv.rules.size());
    std::set<std::uint32_t> used;
    for (const State& s : env.map().frozenCells()) {
        const Decision a = inferSt(idv, s, x0);
        double d = 0.0;
        if (a) {
            const auto sets = buildActionSets(std::span<const StRule>(idv.rules), s);
            const auto& best = sets[static_cast<std::size_t>(toIndex(*a))];
            d = static_cast<double>(best.size());
            used.insert(best.begin(), best.end());
        }
        st.density[cellIndex(s, st.gridSize)] = d;
    }
    st.bamSize = static_cast<int>(used.size());
    return st;
}

BestActionMapStats bestActionMap(const Xcs& xcs, const FrozenLake& env) {
    auto st = emptyStats(env);
    const auto& pop = xcs.population();
    st.rulesetSize = static_cast<int>(std::count_if(pop.begin(), pop.end(), [](const Classifier& c) {
        return c.numerosity > 0;
    }));
    std::set<std::uint32_t> used;
    for (const State& s : env.map().frozenCells()) {
        const Decision a = xcs.greedyAction(s);
        double d = 0.0;
        if (a) {
            for (auto i : xcs.matchSet(s)) {
                if (pop[i].action != *a) continue;
                d += 1.0;
                used.insert(i);
            }
        }
        st.density[cellIndex(s, st.gridSize)] = d;
    }
    st.bamSize = static_cast<int>(used.size());
    return st;
}

EnvContext::EnvContext(EnvSpec spec_, int zReps, std::uint64_t masterSeed)
    : spec(std::move(spec_)), env(spec.build()), z(buildTestSequence(env, zReps)) {
    otp = computeOtp(env, z, deriveSeed(masterSeed, {0x07b0ULL, fnv1a64(spec.label())}));
    if (!(otp.otp > 0.0)) throw ConfigError("optimal testing performance of " + spec.label() + " is zero");
}

namespace {

json mapJson(const FrozenLake& env) {
    json rows = json::array();
    std::istringstream in(env.map().toString());
    for (std::string line; std::getline(in, line);) rows.push_back(line);
    return rows;
}

json snapshotBase(SystemKind system, const EnvContext& ctx) {
    return json{{"format", "lcsbench-snapshot"},
                {"system", std::string(systemName(system))},
                {"env", ctx.spec.label()},
                {"grid_size", ctx.env.gridSize()},
                {"p_slip", ctx.env.pSlip()},
                {"gamma", ctx.env.gamma()},
                {"t_max", ctx.env.tMax()},
                {"map", mapJson(ctx.env)}};
}

template <class Rule>
TrialResult runPplTrialImpl(SystemKind system, const EnvContext& ctx, const GaConfig& cfg, int numGens,
                            std::uint64_t seed, Execution exec) {
    cfg.validate();
    TrialResult out;
    out.system = system;
    out.env = ctx.spec.label();
    out.seed = seed;
    Rng rng(seed);
    const RuleSpace space{ctx.env.gridSize()};
    auto pop = initialPopulation<Rule>(cfg, space, rng);
    const auto init = evaluatePopulation(pop, ctx.env, cfg, ctx.z, rng, exec);
    out.episodes = init.episodes;
    std::size_t best = init.bestIndex;
    out.epochs.reserve(static_cast<std::size_t>(numGens));
    for (int g = 1; g <= numGens; ++g) {
        const auto gen = runGeneration(pop, ctx.env, space, cfg, ctx.z, rng, exec);
        out.gaInvocations += gen.gaInvocations;
        out.episodes += gen.episodes;
        best = gen.bestIndex;
        out.epochs.push_back({g, gen.bestPerformance, gen.bestPerformance / ctx.otp.otp, out.gaInvocations,
                              out.episodes});
    }
    out.ftp = out.epochs.empty() ? 0.0 : out.epochs.back().otpFraction;

    out.snapshot = snapshotBase(system, ctx);
    out.snapshot["x0"] = cfg.x0;
    out.snapshot["fitness"] = pop[best].fitness.value_or(0.0);
    out.snapshot["rules"] = pop[best].rules;
    if constexpr (std::is_same_v<Rule, StRule>) out.bam = bestActionMap(pop[best], ctx.env, cfg.x0);
    return out;
}

}  // namespace

TrialResult runPplTrial(PplVariant variant, const EnvContext& ctx, const GaConfig& cfg, int numGens,
                        std::uint64_t seed, Execution exec) {
    if (variant == PplVariant::DecisionList)
        return runPplTrialImpl<RuleGene>(SystemKind::PplDl, ctx, cfg, numGens, seed, exec);
    return runPplTrialImpl<StRule>(SystemKind::PplSt, ctx, cfg, numGens, seed, exec);
}

TrialResult runXcsTrial(const EnvContext& ctx, const XcsConfig& cfg, int threshold, int numEpochs,
                        std::uint64_t seed, std::uint64_t maxSteps) {
    cfg.validate();
    if (threshold < 1) throw ConfigError("XCS epoch threshold must be positive");
    TrialResult out;
    out.system = SystemKind::Xcs;
    out.env = ctx.spec.label();
    out.seed = seed;
    Rng rng(seed);
    Xcs xcs(cfg, ctx.env.gridSize());
    XcsTrainer trainer(xcs, ctx.env);
    std::uint64_t testEpisodes = 0;
    const auto thr = static_cast<std::uint64_t>(threshold);
    int epoch = 0;
    while (epoch < numEpochs) {
        if (trainer.steps() >= maxSteps) {
            throw std::runtime_error("XCS trial on " + out.env + " reached the step cap of " +
                                     std::to_string(maxSteps) + " after " + std::to_string(epoch) + " of " +
                                     std::to_string(numEpochs) + " epochs (" +
                                     std::to_string(xcs.gaInvocationCount()) + " GA invocations)");
        }
        trainer.step(rng);
        while (epoch < numEpochs && xcs.gaInvocationCount() >= static_cast<std::uint64_t>(epoch + 1) * thr) {
            ++epoch;
            const auto perf = evaluatePerformanceDetailed(ctx.env, xcs.greedyPolicy(), ctx.z, rng);
            testEpisodes += perf.episodes;
            out.epochs.push_back({epoch, perf.performance, perf.performance / ctx.otp.otp, xcs.gaInvocationCount(),
                                  trainer.episodes() + testEpisodes});
        }
    }
    out.gaInvocations = xcs.gaInvocationCount();
    out.episodes = trainer.episodes() + testEpisodes;
    out.steps = trainer.steps();
    out.ftp = out.epochs.empty() ? 0.0 : out.epochs.back().otpFraction;

    out.snapshot = snapshotBase(SystemKind::Xcs, ctx);
    out.snapshot["x0"] = cfg.x0;
    json popJson = json::array();
    for (const auto& cl : xcs.population())
        if (cl.numerosity > 0) popJson.push_back(cl);
    out.snapshot["population"] = std::move(popJson);
    out.bam = bestActionMap(xcs, ctx.env);
    return out;
}

std::uint64_t trialSeed(std::uint64_t masterSeed, const EnvSpec& env, SystemKind system, int trial) {
    return deriveSeed(masterSeed, {fnv1a64(env.label()), static_cast<std::uint64_t>(system),
                                   static_cast<std::uint64_t>(trial)});
}

ExperimentResults runExperiment(const ExperimentConfig& cfg, Execution exec, std::ostream* progress) {
    cfg.validate();
    const auto& h = cfg.harness;
    ExperimentResults results;
    results.envs.reserve(cfg.envs.size());
    for (const auto& spec : cfg.envs) results.envs.emplace_back(spec, h.zReps, h.seed);

    struct Job {
        std::size_t env;
        SystemKind system;
        int trial;
    };
    std::vector<Job> jobs;
    for (std::size_t e = 0; e < results.envs.size(); ++e)
        for (SystemKind s : h.systems)
            for (int t = 0; t < h.trials; ++t) jobs.push_back({e, s, t});

    results.trials.resize(jobs.size());
    std::exception_ptr failure;
    std::mutex mu;
    std::size_t done = 0;

    auto runJob = [&](const Job& job) -> TrialResult {
        const EnvContext& ctx = results.envs[job.env];
        const auto seed = trialSeed(h.seed, ctx.spec, job.system, job.trial);
        const GaConfig ppl = cfg.pplConfigFor(ctx.spec.gridSize);
        TrialResult r;
        switch (job.system) {
            case SystemKind::PplDl:
                r = runPplTrial(PplVariant::DecisionList, ctx, ppl, h.epochs, seed, exec);
                break;
            case SystemKind::PplSt: r = runPplTrial(PplVariant::Strength, ctx, ppl, h.epochs, seed, exec); break;
            case SystemKind::Xcs:
                r = runXcsTrial(ctx, cfg.xcsConfigFor(ctx.env), epochSize(ppl.popSize), h.epochs, seed,
                                h.maxXcsSteps);
                break;
        }
        r.trial = job.trial;
        return r;
    };

    const auto n = static_cast<std::ptrdiff_t>(jobs.size());
#pragma omp parallel for schedule(dynamic, 1) if (exec == Execution::Parallel)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        {
            std::lock_guard lock(mu);
            if (failure) continue;
        }
        try {
            auto r = runJob(jobs[static_cast<std::size_t>(i)]);
            std::lock_guard lock(mu);
            ++done;
            if (progress) {
                *progress << "[" << done << "/" << jobs.size() << "] " << systemName(r.system) << " env " << r.env
                          << " trial " << r.trial << " ftp " << std::setprecision(4) << r.ftp << '\n';
                progress->flush();
            }
            results.trials[static_cast<std::size_t>(i)] = std::move(r);
        } catch (...) {
            std::lock_guard lock(mu);
            if (!failure) failure = std::current_exception();
        }
    }
    if (failure) std::rethrow_exception(failure);
    return results;
}

FtpTable ftpTable(const std::vector<TrialResult>& trials) {
    FtpTable t;
    for (const auto& r : trials) t[r.env][std::string(systemName(r.system))].push_back(r.ftp);
    return t;
}

std::vector<Comparison> compareFtp(const FtpTable& table) {
    std::vector<Comparison> out;
    const std::string st(systemName(SystemKind::PplSt));
    for (const auto& [env, systems] : table) {
        const auto it = systems.find(st);
        if (it == systems.end()) continue;
        for (SystemKind other : {SystemKind::PplDl, SystemKind::Xcs}) {
            const auto o = systems.find(std::string(systemName(other)));
            if (o == systems.end()) continue;
            out.push_back(compareSamples(env, o->first, it->second, o->second));
        }
    }
    return out;
}

std::string ExportHeader::csvLine() const {
    return "# lcsbench " + std::string(toolVersion()) + " config_hash=" + configHash + " seed=" + std::to_string(seed);
}

json ExportHeader::toJson() const {
    return nlohmann::json{{"tool", "lcsbench"}, {"version", std::string(toolVersion())}, {"config_hash", configHash},
                          {"seed", seed}};
}

namespace {

std::ofstream openForWrite(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
    out.flush();
    if (!out) throw std::runtime_error("error while writing " + path.string());
}

void writeJson(const std::filesystem::path& path, const json& j) {
    auto out = openForWrite(path);
    out << j.dump(2) << '\n';
    finish(out, path);
}

std::vector<std::string> splitCsv(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

template <class T>
T parseField(const std::string& text, const std::string& where) {
    T value{};
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (ec != std::errc() || ptr != end || text.empty())
        throw ConfigError(where + ": invalid number '" + text + "'");
    return value;
}

}  // namespace

void writeEpochsCsv(const std::filesystem::path& path, const std::vector<TrialResult>& trials, const ExportHeader& h) {
    auto out = openForWrite(path);
    out << h.csvLine() << '\n' << "env,system,trial,epoch,performance,otp_fraction\n";
    for (const auto& r : trials)
        for (const auto& e : r.epochs)
            out << r.env << ',' << systemName(r.system) << ',' << r.trial << ',' << e.epoch << ','
                << formatDouble(e.performance) << ',' << formatDouble(e.otpFraction) << '\n';
    finish(out, path);
}

std::vector<EpochRow> readEpochsCsv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path.string());
    std::vector<EpochRow> rows;
    bool header = false;
    int lineNo = 0;
    for (std::string line; std::getline(in, line);) {
        ++lineNo;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line.front() == '#') continue;
        const std::string where = path.string() + ":" + std::to_string(lineNo);
        if (!header) {
            if (line != "env,system,trial,epoch,performance,otp_fraction")
                throw ConfigError(where + ": unexpected header '" + line + "'");
            header = true;
            continue;
        }
        const auto f = splitCsv(line);
        if (f.size() != 6) throw ConfigError(where + ": expected 6 fields");
        rows.push_back({f[0], f[1], parseField<int>(f[2], where), parseField<int>(f[3], where),
                        parseField<double>(f[4], where), parseField<double>(f[5], where)});
    }
    if (!header) throw ConfigError(path.string() + ": missing header");
    return rows;
}

FtpTable ftpTable(const std::vector<EpochRow>& rows) {
    std::map<std::tuple<std::string, std::string, int>, std::pair<int, double>> last;
    for (const auto& r : rows) {
        auto [it, inserted] = last.try_emplace({r.env, r.system, r.trial}, r.epoch, r.otpFraction);
        if (!inserted && r.epoch >= it->second.first) it->second = {r.epoch, r.otpFraction};
    }
    FtpTable t;
    for (const auto& [key, v] : last) t[std::get<0>(key)][std::get<1>(key)].push_back(v.second);
    return t;
}

void writeFtpSummaryCsv(const std::filesystem::path& path, const FtpTable& table, const ExportHeader& h) {
    auto out = openForWrite(path);
    out << h.csvLine() << '\n' << "env,system,trials,mean,std\n";
    for (const auto& [env, systems] : table)
        for (const auto& [system, xs] : systems)
            out << env << ',' << system << ',' << xs.size() << ',' << formatDouble(mean(xs)) << ','
                << formatDouble(sampleStd(xs)) << '\n';
    finish(out, path);
}

void writeSignificanceCsv(const std::filesystem::path& path, const std::vector<Comparison>& rows,
                          const ExportHeader& h) {
    auto out = openForWrite(path);
    out << h.csvLine() << '\n'
        << "env,system,other,mean,std,other_mean,other_std,u,p_value,exact,alpha,verdict\n";
    for (const auto& c : rows)
        out << c.env << ',' << systemName(SystemKind::PplSt) << ',' << c.other << ',' << formatDouble(c.meanStrength)
            << ',' << formatDouble(c.stdStrength) << ',' << formatDouble(c.meanOther) << ','
            << formatDouble(c.stdOther) << ',' << formatDouble(c.test.u) << ',' << formatDouble(c.test.pTwoSided)
            << ',' << (c.test.exact ? 1 : 0) << ',' << formatDouble(c.alpha) << ',' << verdictSymbol(c.verdict)
            << '\n';
    finish(out, path);
}

namespace {

json densityGrid(int m, const std::vector<std::optional<double>>& density) {
    json grid = json::array();
    for (int y = 0; y < m; ++y) {
        json row = json::array();
        for (int x = 0; x < m; ++x) {
            const auto& d = density[static_cast<std::size_t>(y * m + x)];
            row.push_back(d ? json(*d) : json(nullptr));
        }
        grid.push_back(std::move(row));
    }
    return grid;
}

}  // namespace

json bestActionMapJson(const BestActionMapStats& stats) {
    return json{{"grid_size", stats.gridSize},
                {"density", densityGrid(stats.gridSize, stats.density)},
                {"ruleset_size", stats.rulesetSize},
                {"bam_size", stats.bamSize}};
}

json heatmapJson(const ExperimentResults& results, const ExportHeader& h) {
    json maps = json::array();
    for (const auto& ctx : results.envs) {
        const std::string label = ctx.spec.label();
        for (SystemKind system : {SystemKind::PplSt, SystemKind::Xcs}) {
            std::vector<const TrialResult*> runs;
            for (const auto& r : results.trials)
                if (r.env == label && r.system == system && r.bam) runs.push_back(&r);
            if (runs.empty()) continue;
            const int m = ctx.env.gridSize();
            std::vector<std::optional<double>> density(static_cast<std::size_t>(m * m));
            json perTrial = json::array();
            std::vector<double> sizes, bamSizes;
            for (const auto* r : runs) {
                for (std::size_t i = 0; i < density.size(); ++i)
                    if (const auto d = r->bam->density[i]) density[i] = density[i].value_or(0.0) + *d;
                sizes.push_back(r->bam->rulesetSize);
                bamSizes.push_back(r->bam->bamSize);
                perTrial.push_back(
                    {{"trial", r->trial}, {"ruleset_size", r->bam->rulesetSize}, {"bam_size", r->bam->bamSize}});
            }
            for (auto& d : density)
                if (d) *d /= static_cast<double>(runs.size());
            maps.push_back({{"env", label},
                            {"system", std::string(systemName(system))},
                            {"grid_size", m},
                            {"trials", runs.size()},
                            {"density", densityGrid(m, density)},
                            {"ruleset_size_mean", mean(sizes)},
                            {"bam_size_mean", mean(bamSizes)},
                            {"per_trial", std::move(perTrial)}});
        }
    }
    return json{{"meta", h.toJson()}, {"heatmaps", std::move(maps)}};
}

void writeDensityCsv(const std::filesystem::path& path, const BestActionMapStats& stats, const ExportHeader& h) {
    auto out = openForWrite(path);
    out << h.csvLine() << '\n' << "x,y,density\n";
    for (int y = 0; y < stats.gridSize; ++y)
        for (int x = 0; x < stats.gridSize; ++x)
            if (const auto d = stats.at({x, y})) out << x << ',' << y << ',' << formatDouble(*d) << '\n';
    finish(out, path);
}

std::string snapshotFileName(const TrialResult& t) {
    std::string env = t.env;
    std::replace(env.begin(), env.end(), ':', '_');
    char trial[16];
    std::snprintf(trial, sizeof trial, "%03d", t.trial);
    return env + "_" + std::string(systemName(t.system)) + "_trial" + trial + ".json";
}

void exportResults(const ExperimentResults& results, const ExperimentConfig& cfg, const std::filesystem::path& outDir) {
    std::error_code ec;
    std::filesystem::create_directories(outDir / "snapshots", ec);
    if (ec) throw std::runtime_error("cannot create " + (outDir / "snapshots").string() + ": " + ec.message());
    const ExportHeader h{cfg.hash(), cfg.harness.seed};

    writeEpochsCsv(outDir / "epochs.csv", results.trials, h);
    const auto table = ftpTable(results.trials);
    writeFtpSummaryCsv(outDir / "ftp_summary.csv", table, h);

    std::vector<Comparison> comparisons;
    try {
        comparisons = compareFtp(table);
    } catch (const ConfigError&) {
        // Fewer than two trials: the table is left with its header only.
    }
    writeSignificanceCsv(outDir / "significance.csv", comparisons, h);
    writeJson(outDir / "heatmaps.json", heatmapJson(results, h));

    for (const auto& t : results.trials) {
        json snap = t.snapshot;
        snap["meta"] = h.toJson();
        snap["trial"] = t.trial;
        snap["seed"] = t.seed;
        snap["ftp"] = t.ftp;
        writeJson(outDir / "snapshots" / snapshotFileName(t), snap);
    }
}

BestActionMapStats analyzeSnapshot(const json& snapshot) {
    try {
        if (!snapshot.is_object() || snapshot.value("format", std::string()) != "lcsbench-snapshot")
            throw ConfigError("not an lcsbench snapshot");
        const SystemKind system = parseSystem(snapshot.at("system").get<std::string>());
        std::string mapText;
        for (const auto& row : snapshot.at("map")) mapText += row.get<std::string>() + "\n";
        const std::optional<int> tMax =
            snapshot.contains("t_max") ? std::optional<int>(snapshot.at("t_max").get<int>()) : std::nullopt;
        FrozenLake env(GridMap::parse(mapText), snapshot.at("p_slip").get<double>(), snapshot.value("gamma", 0.95),
                       tMax);
        const double x0 = snapshot.value("x0", 10.0);
        switch (system) {
            case SystemKind::PplSt: {
                StIndividual idv;
                idv.rules = snapshot.at("rules").get<std::vector<StRule>>();
                return bestActionMap(idv, env, x0);
            }
            case SystemKind::Xcs: {
                XcsConfig xc = XcsConfig::forGrid(env.gridSize());
                xc.x0 = x0;
                const auto xcs = Xcs::fromPopulation(xc, env.gridSize(),
                                                     snapshot.at("population").get<std::vector<Classifier>>());
                return bestActionMap(xcs, env);
            }
            case SystemKind::PplDl: break;
        }
        throw ConfigError("best action maps are defined for ppl-st and xcs snapshots only");
    } catch (const json::exception& e) {
        throw ConfigError(std::string("snapshot schema mismatch: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("snapshot schema mismatch: ") + e.what());
    }
}

}  // namespace lcsbench
