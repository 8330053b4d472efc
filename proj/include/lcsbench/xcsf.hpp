#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

#include "lcsbench/mdp.hpp"
#include "lcsbench/ppl.hpp"
#include "lcsbench/rules.hpp"

namespace lcsbench {

/// (d+1) x (d+1) RLS gain matrix, row-major.
using RlsMatrix = std::array<double, (kStateDims + 1) * (kStateDims + 1)>;

RlsMatrix scaledIdentity(double value) noexcept;

/// One recursive-least-squares step with forgetting factor `lambda`:
/// k = V x / (lambda + x'V x); w += k (target - w'x); V = (V - k x'V) / lambda.
void rlsUpdate(Features& weights, RlsMatrix& gain, const Features& x, double target, double lambda);

/// XCSF macroclassifier with linear computed prediction.
struct Classifier {
    Condition condition;
    Action action = Action::Left;
    Features weights{};
    RlsMatrix rls{};
    double error = 0.0;
    double noise = 0.0;  // running estimate of irreducible payoff noise
    double fitness = 0.0;
    int numerosity = 1;
    int experience = 0;
    double actionSetSize = 1.0;
    std::uint64_t timestamp = 0;

    double prediction(const Features& x) const noexcept { return dot(weights, x); }
};

struct XcsConfig {
    int N = 700;
    double beta = 0.1;
    double alpha = 0.1;
    double eps0 = 0.01;
    double nu = 5.0;
    int thetaGa = 50;
    int thetaDel = 50;
    int thetaSub = 50;
    double tau = 0.5;
    double chi = 0.8;
    double muMut = 0.04;
    double delta = 0.1;
    double epsI = 1e-3;
    double fI = 1e-3;
    double x0 = 10.0;
    double deltaRls = 10.0;
    double lambdaRls = 0.999;
    double muI = 1e-3;
    double betaEps = 0.05;
    int r0 = 2;
    int m0 = 1;
    double exploreEps = 0.5;
    /// Track environmental payoff noise per classifier. Enabled for
    /// stochastic environments by the harness.
    bool noiseTracking = false;

    /// N = 700/2100/4200 for M = 4/8/12, r0 = M/2, m0 = M/4.
    static XcsConfig forGrid(int gridSize);
    void validate() const;
};

using PredictionArray = std::array<std::optional<double>, kNumActions>;

/// Argmax over present entries, ties to the lowest ActionId.
Decision bestAction(const PredictionArray& pa) noexcept;

class Xcs {
public:
    Xcs(XcsConfig cfg, int gridSize);

    /// Rebuilds a system from a stored population (for analysis).
    static Xcs fromPopulation(XcsConfig cfg, int gridSize, std::vector<Classifier> population);

    const XcsConfig& config() const noexcept { return cfg_; }
    int gridSize() const noexcept { return gridSize_; }
    const std::vector<Classifier>& population() const noexcept { return pop_; }
    int numerositySum() const noexcept;
    std::uint64_t gaInvocationCount() const noexcept { return gaCount_; }
    std::uint64_t time() const noexcept { return time_; }
    void tick() noexcept { ++time_; }

    /// Indices of live classifiers matching s. No covering.
    std::vector<std::uint32_t> matchSet(const State& s) const;

    /// Match set after covering every action missing from it. Covering may
    /// trigger deletion; deleted classifiers keep numerosity 0 until compact().
    std::vector<std::uint32_t> matchSetWithCovering(const State& s, Rng& rng);

    /// Fitness-weighted mean prediction per action; absent for empty sets.
    PredictionArray predictionArray(std::span<const std::uint32_t> matchSet, const State& s) const;

    /// Greedy testing decision: no covering, no updates. Null on an empty match set.
    Decision greedyAction(const State& s) const;
    Policy greedyPolicy() const;

    /// Reinforcement of an action set towards `payoff`.
    void updateSet(std::span<const std::uint32_t> actionSet, const State& s, double payoff);

    /// Runs the GA in the action set if the mean timestamp lag reached
    /// theta_GA. Returns true when a GA event (two children) happened.
    bool runGa(std::span<const std::uint32_t> actionSet, Rng& rng);

    /// Drops classifiers with numerosity 0. Returns the old-to-new index map
    /// (kRemoved for dropped entries).
    std::vector<std::uint32_t> compact();
    static constexpr std::uint32_t kRemoved = 0xffffffffu;

    /// Adds a classifier, merging it into an identical live macroclassifier.
    void insert(Classifier cl);

    Classifier coveringClassifier(const State& s, Action a, Rng& rng) const;

private:
    void deleteIfNeeded(Rng& rng);
    std::size_t selectParent(std::span<const std::uint32_t> actionSet, Rng& rng) const;
    bool subsumes(const Classifier& general, const Classifier& specific) const noexcept;
    void mutateChild(Classifier& cl, Rng& rng) const;

    XcsConfig cfg_;
    int gridSize_;
    std::vector<Classifier> pop_;
    std::uint64_t time_ = 0;
    std::uint64_t gaCount_ = 0;
};

/// Drives XCS training one environment time step at a time: teletransported
/// episode starts, per-episode explore/exploit choice, one-step Q-learning
/// backups into the previous action set, and the GA.
class XcsTrainer {
public:
    XcsTrainer(Xcs& xcs, const EpisodicMdp& env) : xcs_(&xcs), env_(&env) {}

    /// Executes one time step, starting a new episode when needed. Returns
    /// the number of GA events it caused.
    std::uint64_t step(Rng& rng);

    bool inEpisode() const noexcept { return active_; }
    std::uint64_t steps() const noexcept { return steps_; }
    std::uint64_t episodes() const noexcept { return episodes_; }

private:
    Xcs* xcs_;
    const EpisodicMdp* env_;
    bool active_ = false;
    bool explore_ = false;
    int t_ = 0;
    State state_;
    bool hasPrev_ = false;
    State prevState_;
    double prevReward_ = 0.0;
    std::vector<std::uint32_t> prevSet_;
    std::uint64_t steps_ = 0;
    std::uint64_t episodes_ = 0;
};

void to_json(nlohmann::json& j, const Classifier& cl);
void from_json(const nlohmann::json& j, Classifier& cl);

}  // namespace lcsbench
