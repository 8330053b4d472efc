#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include <json.hpp>

#include "lcsbench/execution.hpp"
#include "lcsbench/mdp.hpp"
#include "lcsbench/rules.hpp"

namespace lcsbench {

/// Augmented input [x0, s_1, ..., s_d] used by linear computed prediction.
using Features = std::array<double, kStateDims + 1>;

inline Features augment(const State& s, double x0) noexcept {
    return {x0, static_cast<double>(s.x), static_cast<double>(s.y)};
}

inline double dot(const Features& a, const Features& b) noexcept {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

/// Strength-variant rule: gene plus a linear payoff predictor and a payoff
/// variance estimate. Fresh rules start at w = 0, var = 0.
struct StRule {
    RuleGene gene;
    Features weights{};
    double variance = 0.0;

    double prediction(const Features& x) const noexcept { return dot(weights, x); }
    friend bool operator==(const StRule&, const StRule&) = default;
};

inline const RuleGene& geneOf(const StRule& r) noexcept { return r.gene; }

/// prediction(x) - sqrt(var). The caller guarantees the rule matches s.
double strength(const StRule& rule, const State& s, double x0);

enum class PplVariant { DecisionList, Strength };

struct GaConfig {
    int popSize = 112;
    int idvSize = 7;
    int tournSize = 3;
    double pCross = 0.7;
    double pMut = 0.01;
    int numReinfRollouts = 10;
    double eta = 0.1;
    double x0 = 10.0;

    /// idvSize 7/21/42 and popSize 16 * idvSize for M = 4/8/12.
    static GaConfig forGrid(int gridSize);
    /// Throws ConfigError on an odd or non-positive popSize and other
    /// out-of-range values.
    void validate() const;
};

/// Fixed-length ruleset. `fitness` is empty until evaluated.
template <class Rule>
struct Individual {
    std::vector<Rule> rules;
    std::optional<double> fitness;
};

using DlIndividual = Individual<RuleGene>;
using StIndividual = Individual<StRule>;

/// Action of the first matching rule in list order, or null.
Decision inferDl(const DlIndividual& idv, const State& s);

/// Double max: each action is advocated with the strongest rule in its action
/// set; the action with the highest advocated strength wins, ties to the
/// lowest ActionId. Null when nothing matches.
Decision inferSt(const StIndividual& idv, const State& s, double x0);

Policy policyOf(const DlIndividual& idv);
Policy policyOf(const StIndividual& idv, double x0);

/// NLMS step on every rule of `actionSet` (indices into `rules`) towards
/// `payoff`, then the variance update with the post-update prediction.
void updateActionSet(std::span<StRule> rules, std::span<const std::uint32_t> actionSet, double payoff, const State& s,
                     double eta, double x0);

/// Payoffs applied by the backward reinforcement loop, indexed front to back:
/// iterating i = T-1 .. 0, rSum accumulates r_i and the payoff at i is
/// gamma^(T-1-i) * rSum.
std::vector<double> reinforcementPayoffs(std::span<const double> rewards, double gamma);

/// Rollout under inferSt recording each step's action set. Stops at a
/// terminal cell, t_max, or a null decision.
Trajectory generateTrajectory(const EpisodicMdp& env, const StIndividual& idv, double x0, const State& start,
                              Rng& rng);

/// Monte Carlo reinforcement of rule predictions over numReinfRollouts
/// trajectories from uniform initial states. Returns episodes consumed.
std::size_t reinforceRules(const EpisodicMdp& env, StIndividual& idv, const GaConfig& cfg, Rng& rng);

/// Uniform crossover. Decision lists swap individual alleles; strength
/// rulesets swap whole rules (weights and variance travel with the rule).
std::pair<DlIndividual, DlIndividual> crossover(const DlIndividual& a, const DlIndividual& b, Rng& rng);
std::pair<StIndividual, StIndividual> crossover(const StIndividual& a, const StIndividual& b, Rng& rng);

/// Context shared by the GA operators for one environment.
struct RuleSpace {
    int gridSize = 4;
    int maxCoord() const noexcept { return gridSize - 1; }
};

template <class Rule>
Individual<Rule> randomIndividual(int idvSize, const RuleSpace& space, Rng& rng);

template <class Rule>
std::vector<Individual<Rule>> initialPopulation(const GaConfig& cfg, const RuleSpace& space, Rng& rng);

/// Index of the fittest of tournSize uniform draws (with replacement); ties
/// go to the earliest draw.
template <class Rule>
std::size_t tournamentSelect(std::span<const Individual<Rule>> pop, int tournSize, Rng& rng);

template <class Rule>
void mutate(Individual<Rule>& idv, double pMut, const RuleSpace& space, Rng& rng);

struct EvaluationSummary {
    std::size_t episodes = 0;
    double bestPerformance = 0.0;
    std::size_t bestIndex = 0;
};

/// Reinforces (strength variant) and evaluates every individual. Individual i
/// uses a private stream seeded with seeds[i], so the serial and parallel
/// paths agree exactly.
template <class Rule>
EvaluationSummary evaluateIndividuals(std::span<Individual<Rule>> idvs, const EpisodicMdp& env, const GaConfig& cfg,
                                      std::span<const State> z, std::span<const std::uint64_t> seeds, Execution exec);

/// Draws one seed per individual from `rng` and evaluates the population.
template <class Rule>
EvaluationSummary evaluatePopulation(std::vector<Individual<Rule>>& pop, const EpisodicMdp& env, const GaConfig& cfg,
                                     std::span<const State> z, Rng& rng, Execution exec = Execution::Parallel);

struct GenerationResult {
    double bestPerformance = 0.0;
    std::size_t bestIndex = 0;
    std::size_t gaInvocations = 0;
    std::size_t episodes = 0;
};

/// One generation of the canonical GA: popSize / 2 breeding rounds of two
/// tournaments, crossover with pCross and mutation of both children; the
/// offspring replace the population and are then evaluated.
template <class Rule>
GenerationResult runGeneration(std::vector<Individual<Rule>>& pop, const EpisodicMdp& env, const RuleSpace& space,
                               const GaConfig& cfg, std::span<const State> z, Rng& rng,
                               Execution exec = Execution::Parallel);

void to_json(nlohmann::json& j, const StRule& r);
void from_json(const nlohmann::json& j, StRule& r);

}  // namespace lcsbench
