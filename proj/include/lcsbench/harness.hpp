#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "lcsbench/config.hpp"
#include "lcsbench/execution.hpp"
#include "lcsbench/frozenlake.hpp"
#include "lcsbench/oracle.hpp"
#include "lcsbench/ppl.hpp"
#include "lcsbench/stats.hpp"
#include "lcsbench/xcsf.hpp"

namespace lcsbench {

std::string_view toolVersion() noexcept;

/// popSize * (numReinfRollouts + zLen).
std::uint64_t episodesPerGen(std::uint64_t popSize, std::uint64_t numReinfRollouts, std::uint64_t zLen) noexcept;

/// GA invocations per PPL generation (popSize / 2). Throws ConfigError on an
/// odd or non-positive popSize.
int epochSize(int pplPopSize);

struct EpochRecord {
    int epoch = 0;  // 1-based
    double performance = 0.0;
    double otpFraction = 0.0;
    std::uint64_t gaInvocations = 0;  // cumulative at test time
    std::uint64_t episodes = 0;       // cumulative at test time
};

/// Density grid is M x M row-major; terminal cells are empty.
struct BestActionMapStats {
    int gridSize = 0;
    std::vector<std::optional<double>> density;
    int rulesetSize = 0;  // |R|
    int bamSize = 0;      // |R_BA|

    std::optional<double> at(const State& s) const { return density[static_cast<std::size_t>(s.y * gridSize + s.x)]; }
};

BestActionMapStats bestActionMap(const StIndividual& idv, const FrozenLake& env, double x0);
/// Densities count macroclassifiers.
BestActionMapStats bestActionMap(const Xcs& xcs, const FrozenLake& env);

/// Environment prepared once per experiment: the test sequence and its OTP.
struct EnvContext {
    EnvContext(EnvSpec spec, int zReps, std::uint64_t masterSeed);

    EnvSpec spec;
    FrozenLake env;
    std::vector<State> z;
    OtpResult otp;
};

struct TrialResult {
    SystemKind system = SystemKind::Xcs;
    std::string env;
    int trial = 0;
    std::uint64_t seed = 0;
    std::vector<EpochRecord> epochs;
    double ftp = 0.0;
    std::uint64_t gaInvocations = 0;
    std::uint64_t episodes = 0;
    std::uint64_t steps = 0;  // XCS training time steps
    std::optional<BestActionMapStats> bam;
    nlohmann::json snapshot;  // final ruleset (best individual for PPL)
};

/// One epoch per generation after evaluating the initial population; epoch
/// performance is the best fitness of the new population.
TrialResult runPplTrial(PplVariant variant, const EnvContext& ctx, const GaConfig& cfg, int numGens,
                        std::uint64_t seed, Execution exec = Execution::Parallel);

/// Trains step by step and tests greedily over z each time the cumulative GA
/// count first reaches a multiple of `threshold`. Throws std::runtime_error
/// if numEpochs tests are not reached within maxSteps steps.
TrialResult runXcsTrial(const EnvContext& ctx, const XcsConfig& cfg, int threshold, int numEpochs,
                        std::uint64_t seed, std::uint64_t maxSteps = 100'000'000);

std::uint64_t trialSeed(std::uint64_t masterSeed, const EnvSpec& env, SystemKind system, int trial);

struct ExperimentResults {
    std::vector<EnvContext> envs;
    std::vector<TrialResult> trials;  // ordered by env, system, trial
};

/// Runs every (env, system, trial) job; jobs run concurrently with `exec`.
ExperimentResults runExperiment(const ExperimentConfig& cfg, Execution exec = Execution::Parallel,
                                std::ostream* progress = nullptr);

/// FTP samples per env label and system name.
using FtpTable = std::map<std::string, std::map<std::string, std::vector<double>>>;

FtpTable ftpTable(const std::vector<TrialResult>& trials);

/// PPL-ST against PPL-DL and XCS per environment at family-wise 0.05.
/// Environments lacking PPL-ST or a comparison partner are skipped.
std::vector<Comparison> compareFtp(const FtpTable& table);

struct ExportHeader {
    std::string configHash;
    std::uint64_t seed = 0;

    std::string csvLine() const;
    nlohmann::json toJson() const;
};

struct EpochRow {
    std::string env;
    std::string system;
    int trial = 0;
    int epoch = 0;
    double performance = 0.0;
    double otpFraction = 0.0;
};

void writeEpochsCsv(const std::filesystem::path& path, const std::vector<TrialResult>& trials, const ExportHeader& h);
/// Skips '#' lines; throws ConfigError on a malformed header or row.
std::vector<EpochRow> readEpochsCsv(const std::filesystem::path& path);
/// FTP per (env, system): the last epoch of every trial.
FtpTable ftpTable(const std::vector<EpochRow>& rows);

void writeFtpSummaryCsv(const std::filesystem::path& path, const FtpTable& table, const ExportHeader& h);
void writeSignificanceCsv(const std::filesystem::path& path, const std::vector<Comparison>& rows,
                          const ExportHeader& h);
nlohmann::json heatmapJson(const ExperimentResults& results, const ExportHeader& h);
nlohmann::json bestActionMapJson(const BestActionMapStats& stats);
void writeDensityCsv(const std::filesystem::path& path, const BestActionMapStats& stats, const ExportHeader& h);

/// Writes epochs.csv, ftp_summary.csv, significance.csv, heatmaps.json and
/// snapshots/*.json into `outDir`. Throws std::runtime_error when a file
/// cannot be written.
void exportResults(const ExperimentResults& results, const ExperimentConfig& cfg, const std::filesystem::path& outDir);

/// Recomputes best-action-map statistics from a stored snapshot. Throws
/// ConfigError on a schema mismatch or a non PPL-ST/XCS snapshot.
BestActionMapStats analyzeSnapshot(const nlohmann::json& snapshot);

std::string snapshotFileName(const TrialResult& t);

}  // namespace lcsbench
