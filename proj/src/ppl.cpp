#include "lcsbench/ppl.hpp"

#include <cmath>
#include <exception>
#include <limits>
#include <type_traits>

#include "lcsbench/error.hpp"

namespace lcsbench {

double strength(const StRule& rule, const State& s, double x0) {
    return rule.prediction(augment(s, x0)) - std::sqrt(rule.variance);
}

GaConfig GaConfig::forGrid(int gridSize) {
    GaConfig cfg;
    switch (gridSize) {
        case 4: cfg.idvSize = 7; break;
        case 8: cfg.idvSize = 21; break;
        case 12: cfg.idvSize = 42; break;
        default: cfg.idvSize = std::max(1, (gridSize * gridSize) / 2); break;
    }
    cfg.popSize = 16 * cfg.idvSize;
    return cfg;
}

void GaConfig::validate() const {
    if (popSize < 2 || popSize % 2 != 0) throw ConfigError("pop_size must be a positive even integer");
    if (idvSize < 1) throw ConfigError("idv_size must be positive");
    if (tournSize < 1) throw ConfigError("tourn_size must be positive");
    if (!(pCross >= 0.0 && pCross <= 1.0)) throw ConfigError("p_cross must lie in [0, 1]");
    if (!(pMut >= 0.0 && pMut <= 1.0)) throw ConfigError("p_mut must lie in [0, 1]");
    if (numReinfRollouts < 0) throw ConfigError("num_reinf_rollouts must be non-negative");
    if (!(eta > 0.0 && eta <= 1.0)) throw ConfigError("eta must lie in (0, 1]");
    if (x0 == 0.0) throw ConfigError("x0 must be non-zero");
}

Decision inferDl(const DlIndividual& idv, const State& s) {
    for (const RuleGene& r : idv.rules)
        if (r.condition.matches(s)) return r.action;
    return std::nullopt;
}

Decision inferSt(const StIndividual& idv, const State& s, double x0) {
    constexpr double kNone = -std::numeric_limits<double>::infinity();
    std::array<double, kNumActions> advocated;
    advocated.fill(kNone);
    std::array<bool, kNumActions> present{};
    const Features x = augment(s, x0);
    for (const StRule& r : idv.rules) {
        if (!r.gene.condition.matches(s)) continue;
        const auto a = static_cast<std::size_t>(toIndex(r.gene.action));
        const double st = r.prediction(x) - std::sqrt(r.variance);
        if (!present[a] || st > advocated[a]) advocated[a] = st;
        present[a] = true;
    }
    Decision best;
    double bestStrength = kNone;
    for (int a = 0; a < kNumActions; ++a) {
        if (!present[static_cast<std::size_t>(a)]) continue;
        if (!best || advocated[static_cast<std::size_t>(a)] > bestStrength) {
            best = actionFromIndex(a);
            bestStrength = advocated[static_cast<std::size_t>(a)];
        }
    }
    return best;
}

Policy policyOf(const DlIndividual& idv) {
    return [&idv](const State& s) { return inferDl(idv, s); };
}

Policy policyOf(const StIndividual& idv, double x0) {
    return [&idv, x0](const State& s) { return inferSt(idv, s, x0); };
}

void updateActionSet(std::span<StRule> rules, std::span<const std::uint32_t> actionSet, double payoff, const State& s,
                     double eta, double x0) {
    const Features x = augment(s, x0);
    const double norm2 = dot(x, x);
    for (std::uint32_t idx : actionSet) {
        StRule& r = rules[idx];
        const double err = payoff - r.prediction(x);
        const double gain = eta / norm2 * err;
        for (std::size_t k = 0; k < x.size(); ++k) r.weights[k] += gain * x[k];
        const double resid = r.prediction(x) - payoff;
        r.variance = (1.0 - eta) * r.variance + eta * resid * resid;
    }
}

std::vector<double> reinforcementPayoffs(std::span<const double> rewards, double gamma) {
    const std::size_t T = rewards.size();
    std::vector<double> payoffs(T);
    double rSum = 0.0;
    double discount = 1.0;  // gamma^j, j = T-1-i
    for (std::size_t n = 0; n < T; ++n) {
        const std::size_t i = T - 1 - n;
        rSum += rewards[i];
        payoffs[i] = discount * rSum;
        discount *= gamma;
    }
    return payoffs;
}

Trajectory generateTrajectory(const EpisodicMdp& env, const StIndividual& idv, double x0, const State& start,
                              Rng& rng) {
    Trajectory traj;
    State s = start;
    const std::span<const StRule> rules(idv.rules);
    for (int t = 0; t < env.tMax(); ++t) {
        const Decision d = inferSt(idv, s, x0);
        if (!d) {
            traj.truncated = true;
            traj.nullAction = true;
            return traj;
        }
        const StepOutcome out = env.step(s, *d, rng);
        auto sets = buildActionSets(rules, s);
        traj.steps.push_back({s, *d, out.reward, std::move(sets[static_cast<std::size_t>(toIndex(*d))])});
        if (out.terminal) return traj;
        s = out.next;
    }
    traj.truncated = true;
    return traj;
}

std::size_t reinforceRules(const EpisodicMdp& env, StIndividual& idv, const GaConfig& cfg, Rng& rng) {
    const auto starts = env.initialStates();
    std::vector<double> rewards;
    for (int n = 0; n < cfg.numReinfRollouts; ++n) {
        const State& start = starts[rng.index(starts.size())];
        const Trajectory traj = generateTrajectory(env, idv, cfg.x0, start, rng);
        rewards.clear();
        for (const auto& st : traj.steps) rewards.push_back(st.reward);
        const auto payoffs = reinforcementPayoffs(rewards, env.gamma());
        // Backward order, as in the reinforcement loop.
        for (std::size_t k = traj.steps.size(); k-- > 0;) {
            const auto& st = traj.steps[k];
            updateActionSet(idv.rules, st.actionSet, payoffs[k], st.state, cfg.eta, cfg.x0);
        }
    }
    return static_cast<std::size_t>(cfg.numReinfRollouts);
}

std::pair<DlIndividual, DlIndividual> crossover(const DlIndividual& a, const DlIndividual& b, Rng& rng) {
    DlIndividual c1{a.rules, std::nullopt};
    DlIndividual c2{b.rules, std::nullopt};
    for (std::size_t i = 0; i < c1.rules.size(); ++i) {
        auto& r1 = c1.rules[i];
        auto& r2 = c2.rules[i];
        for (int d = 0; d < kStateDims; ++d) {
            if (rng.bernoulli(0.5)) std::swap(r1.condition.dims[d].p, r2.condition.dims[d].p);
            if (rng.bernoulli(0.5)) std::swap(r1.condition.dims[d].q, r2.condition.dims[d].q);
        }
        if (rng.bernoulli(0.5)) std::swap(r1.action, r2.action);
    }
    return {std::move(c1), std::move(c2)};
}

std::pair<StIndividual, StIndividual> crossover(const StIndividual& a, const StIndividual& b, Rng& rng) {
    StIndividual c1{a.rules, std::nullopt};
    StIndividual c2{b.rules, std::nullopt};
    for (std::size_t i = 0; i < c1.rules.size(); ++i)
        if (rng.bernoulli(0.5)) std::swap(c1.rules[i], c2.rules[i]);
    return {std::move(c1), std::move(c2)};
}

template <class Rule>
Individual<Rule> randomIndividual(int idvSize, const RuleSpace& space, Rng& rng) {
    Individual<Rule> idv;
    idv.rules.reserve(static_cast<std::size_t>(idvSize));
    for (int i = 0; i < idvSize; ++i) {
        if constexpr (std::is_same_v<Rule, StRule>)
            idv.rules.push_back(StRule{randomRule(space.maxCoord(), rng), {}, 0.0});
        else
            idv.rules.push_back(randomRule(space.maxCoord(), rng));
    }
    return idv;
}

template <class Rule>
std::vector<Individual<Rule>> initialPopulation(const GaConfig& cfg, const RuleSpace& space, Rng& rng) {
    std::vector<Individual<Rule>> pop;
    pop.reserve(static_cast<std::size_t>(cfg.popSize));
    for (int i = 0; i < cfg.popSize; ++i) pop.push_back(randomIndividual<Rule>(cfg.idvSize, space, rng));
    return pop;
}

template <class Rule>
std::size_t tournamentSelect(std::span<const Individual<Rule>> pop, int tournSize, Rng& rng) {
    std::size_t best = rng.index(pop.size());
    for (int k = 1; k < tournSize; ++k) {
        const std::size_t c = rng.index(pop.size());
        if (pop[c].fitness.value_or(0.0) > pop[best].fitness.value_or(0.0)) best = c;
    }
    return best;
}

template <class Rule>
void mutate(Individual<Rule>& idv, double pMut, const RuleSpace& space, Rng& rng) {
    const auto mutators = gridMutators(space.gridSize);
    for (auto& r : idv.rules) {
        if constexpr (std::is_same_v<Rule, StRule>)
            r.gene = mutateRule(r.gene, pMut, mutators, space.maxCoord(), rng);
        else
            r = mutateRule(r, pMut, mutators, space.maxCoord(), rng);
    }
}

namespace {

template <class Rule>
std::size_t evaluateOne(Individual<Rule>& idv, const EpisodicMdp& env, const GaConfig& cfg,
                        std::span<const State> z, std::uint64_t seed) {
    Rng rng(seed);
    std::size_t episodes = 0;
    PerformanceResult perf;
    if constexpr (std::is_same_v<Rule, StRule>) {
        episodes += reinforceRules(env, idv, cfg, rng);
        perf = evaluatePerformanceDetailed(env, policyOf(idv, cfg.x0), z, rng);
    } else {
        perf = evaluatePerformanceDetailed(env, policyOf(idv), z, rng);
    }
    idv.fitness = perf.performance;
    return episodes + perf.episodes;
}

template <class Rule>
EvaluationSummary summarize(std::span<const Individual<Rule>> idvs, std::size_t episodes) {
    EvaluationSummary out;
    out.episodes = episodes;
    out.bestPerformance = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < idvs.size(); ++i) {
        if (*idvs[i].fitness > out.bestPerformance) {
            out.bestPerformance = *idvs[i].fitness;
            out.bestIndex = i;
        }
    }
    return out;
}

// Serial reference for the OpenMP kernel below.
template <class Rule>
std::size_t evaluateSerial(std::span<Individual<Rule>> idvs, const EpisodicMdp& env, const GaConfig& cfg,
                           std::span<const State> z, std::span<const std::uint64_t> seeds) {
    std::size_t episodes = 0;
    for (std::size_t i = 0; i < idvs.size(); ++i) episodes += evaluateOne(idvs[i], env, cfg, z, seeds[i]);
    return episodes;
}

template <class Rule>
std::size_t evaluateParallel(std::span<Individual<Rule>> idvs, const EpisodicMdp& env, const GaConfig& cfg,
                             std::span<const State> z, std::span<const std::uint64_t> seeds) {
    const auto n = static_cast<std::ptrdiff_t>(idvs.size());
    std::size_t episodes = 0;
    std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic) reduction(+ : episodes)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        try {
            episodes += evaluateOne(idvs[static_cast<std::size_t>(i)], env, cfg, z, seeds[static_cast<std::size_t>(i)]);
        } catch (...) {
#pragma omp critical(lcsbench_eval_failure)
            if (!failure) failure = std::current_exception();
        }
    }
    if (failure) std::rethrow_exception(failure);
    return episodes;
}

}  // namespace

template <class Rule>
EvaluationSummary evaluateIndividuals(std::span<Individual<Rule>> idvs, const EpisodicMdp& env, const GaConfig& cfg,
                                      std::span<const State> z, std::span<const std::uint64_t> seeds, Execution exec) {
    if (z.empty()) throw ConfigError("test sequence z must not be empty");
    if (seeds.size() != idvs.size()) throw std::invalid_argument("one seed per individual required");
    const std::size_t episodes = exec == Execution::Parallel ? evaluateParallel(idvs, env, cfg, z, seeds)
                                                             : evaluateSerial(idvs, env, cfg, z, seeds);
    return summarize(std::span<const Individual<Rule>>(idvs), episodes);
}

template <class Rule>
EvaluationSummary evaluatePopulation(std::vector<Individual<Rule>>& pop, const EpisodicMdp& env, const GaConfig& cfg,
                                     std::span<const State> z, Rng& rng, Execution exec) {
    std::vector<std::uint64_t> seeds(pop.size());
    for (auto& s : seeds) s = rng.next();
    return evaluateIndividuals(std::span<Individual<Rule>>(pop), env, cfg, z, seeds, exec);
}

template <class Rule>
GenerationResult runGeneration(std::vector<Individual<Rule>>& pop, const EpisodicMdp& env, const RuleSpace& space,
                               const GaConfig& cfg, std::span<const State> z, Rng& rng, Execution exec) {
    const std::span<const Individual<Rule>> parents(pop);
    std::vector<Individual<Rule>> next;
    next.reserve(pop.size());
    const std::size_t rounds = pop.size() / 2;
    for (std::size_t round = 0; round < rounds; ++round) {
        const auto& a = parents[tournamentSelect(parents, cfg.tournSize, rng)];
        const auto& b = parents[tournamentSelect(parents, cfg.tournSize, rng)];
        auto children = rng.bernoulli(cfg.pCross)
                            ? crossover(a, b, rng)
                            : std::pair<Individual<Rule>, Individual<Rule>>{Individual<Rule>{a.rules, std::nullopt},
                                                                            Individual<Rule>{b.rules, std::nullopt}};
        mutate(children.first, cfg.pMut, space, rng);
        mutate(children.second, cfg.pMut, space, rng);
        next.push_back(std::move(children.first));
        next.push_back(std::move(children.second));
    }
    pop = std::move(next);
    const auto eval = evaluatePopulation(pop, env, cfg, z, rng, exec);
    return {eval.bestPerformance, eval.bestIndex, rounds, eval.episodes};
}

void to_json(nlohmann::json& j, const StRule& r) {
    j = r.gene;
    j["weights"] = r.weights;
    j["variance"] = r.variance;
}

void from_json(const nlohmann::json& j, StRule& r) {
    j.get_to(r.gene);
    r.weights = {};
    r.variance = 0.0;
    if (j.contains("weights")) {
        const auto w = j.at("weights").get<std::vector<double>>();
        if (w.size() != r.weights.size()) throw std::invalid_argument("weights must have d + 1 entries");
        std::copy(w.begin(), w.end(), r.weights.begin());
    }
    if (j.contains("variance")) r.variance = j.at("variance").get<double>();
}

#define LCSBENCH_INSTANTIATE(Rule)                                                                                 \
    template Individual<Rule> randomIndividual<Rule>(int, const RuleSpace&, Rng&);                                 \
    template std::vector<Individual<Rule>> initialPopulation<Rule>(const GaConfig&, const RuleSpace&, Rng&);       \
    template std::size_t tournamentSelect<Rule>(std::span<const Individual<Rule>>, int, Rng&);                    \
    template void mutate<Rule>(Individual<Rule>&, double, const RuleSpace&, Rng&);                                \
    template EvaluationSummary evaluateIndividuals<Rule>(std::span<Individual<Rule>>, const EpisodicMdp&,          \
                                                         const GaConfig&, std::span<const State>,                  \
                                                         std::span<const std::uint64_t>, Execution);               \
    template EvaluationSummary evaluatePopulation<Rule>(std::vector<Individual<Rule>>&, const EpisodicMdp&,        \
                                                        const GaConfig&, std::span<const State>, Rng&, Execution); \
    template GenerationResult runGeneration<Rule>(std::vector<Individual<Rule>>&, const EpisodicMdp&,              \
                                                  const RuleSpace&, const GaConfig&, std::span<const State>, Rng&, \
                                                  Execution);

LCSBENCH_INSTANTIATE(RuleGene)
LCSBENCH_INSTANTIATE(StRule)

#undef LCSBENCH_INSTANTIATE

}  // namespace lcsbench
