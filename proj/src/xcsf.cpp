#include "lcsbench/xcsf.hpp"

#include <algorithm>
#include <cmath>

#include "lcsbench/error.hpp"

namespace lcsbench {

namespace {

constexpr std::size_t kDim = kStateDims + 1;

// With forgetting, the gain matrix grows by 1 / lambda per update along
// directions the inputs never excite. Past this trace it is reset.
constexpr double kRlsTraceLimit = 1e8;

}  // namespace

RlsMatrix scaledIdentity(double value) noexcept {
    RlsMatrix m{};
    for (std::size_t i = 0; i < kDim; ++i) m[i * kDim + i] = value;
    return m;
}

void rlsUpdate(Features& weights, RlsMatrix& gain, const Features& x, double target, double lambda) {
    Features vx{};
    for (std::size_t i = 0; i < kDim; ++i)
        for (std::size_t j = 0; j < kDim; ++j) vx[i] += gain[i * kDim + j] * x[j];
    const double denom = lambda + dot(x, vx);
    Features k;
    for (std::size_t i = 0; i < kDim; ++i) k[i] = vx[i] / denom;
    const double err = target - dot(weights, x);
    for (std::size_t i = 0; i < kDim; ++i) weights[i] += k[i] * err;
    // V symmetric, so x'V = (Vx)'.
    for (std::size_t i = 0; i < kDim; ++i)
        for (std::size_t j = 0; j < kDim; ++j) gain[i * kDim + j] = (gain[i * kDim + j] - k[i] * vx[j]) / lambda;
}

XcsConfig XcsConfig::forGrid(int gridSize) {
    XcsConfig cfg;
    switch (gridSize) {
        case 4: cfg.N = 700; break;
        case 8: cfg.N = 2100; break;
        case 12: cfg.N = 4200; break;
        default: cfg.N = 350 * gridSize; break;
    }
    cfg.r0 = gridSize / 2;
    cfg.m0 = gridSize / 4;
    return cfg;
}

void XcsConfig::validate() const {
    if (N < 1) throw ConfigError("xcs n must be positive");
    auto unit = [](double v, const char* name) {
        if (!(v > 0.0 && v <= 1.0)) throw ConfigError(std::string("xcs ") + name + " must lie in (0, 1]");
    };
    unit(beta, "beta");
    unit(alpha, "alpha");
    unit(tau, "tau");
    unit(lambdaRls, "lambda_rls");
    unit(betaEps, "beta_eps");
    if (!(chi >= 0.0 && chi <= 1.0)) throw ConfigError("xcs chi must lie in [0, 1]");
    if (!(muMut >= 0.0 && muMut <= 1.0)) throw ConfigError("xcs mu_mut must lie in [0, 1]");
    if (!(exploreEps >= 0.0 && exploreEps <= 1.0)) throw ConfigError("xcs explore_eps must lie in [0, 1]");
    if (eps0 <= 0.0) throw ConfigError("xcs eps0 must be positive");
    if (fI <= 0.0) throw ConfigError("xcs f_i must be positive");
    if (deltaRls <= 0.0) throw ConfigError("xcs delta_rls must be positive");
    if (x0 == 0.0) throw ConfigError("xcs x0 must be non-zero");
    if (r0 < 0 || m0 < 0) throw ConfigError("xcs r0 and m0 must be non-negative");
    if (thetaGa < 0 || thetaDel < 0 || thetaSub < 0) throw ConfigError("xcs thresholds must be non-negative");
}

Decision bestAction(const PredictionArray& pa) noexcept {
    Decision best;
    double value = 0.0;
    for (int a = 0; a < kNumActions; ++a) {
        const auto& v = pa[static_cast<std::size_t>(a)];
        if (v && (!best || *v > value)) {
            best = actionFromIndex(a);
            value = *v;
        }
    }
    return best;
}

Xcs::Xcs(XcsConfig cfg, int gridSize) : cfg_(cfg), gridSize_(gridSize) {
    cfg_.validate();
    if (gridSize_ < 1) throw ConfigError("grid size must be positive");
    pop_.reserve(static_cast<std::size_t>(cfg_.N) + 8);
}

Xcs Xcs::fromPopulation(XcsConfig cfg, int gridSize, std::vector<Classifier> population) {
    Xcs x(cfg, gridSize);
    x.pop_ = std::move(population);
    return x;
}

int Xcs::numerositySum() const noexcept {
    int n = 0;
    for (const auto& cl : pop_) n += cl.numerosity;
    return n;
}

std::vector<std::uint32_t> Xcs::matchSet(const State& s) const {
    std::vector<std::uint32_t> ms;
    for (std::uint32_t i = 0; i < pop_.size(); ++i)
        if (pop_[i].numerosity > 0 && pop_[i].condition.matches(s)) ms.push_back(i);
    return ms;
}

Classifier Xcs::coveringClassifier(const State& s, Action a, Rng& rng) const {
    Classifier cl;
    const int maxCoord = gridSize_ - 1;
    const std::array<int, kStateDims> coords{s.x, s.y};
    for (int d = 0; d < kStateDims; ++d) {
        const int lo = std::max(0, coords[static_cast<std::size_t>(d)] - rng.uniformInt(0, cfg_.r0));
        const int hi = std::min(maxCoord, coords[static_cast<std::size_t>(d)] + rng.uniformInt(0, cfg_.r0));
        cl.condition.dims[d] = {lo, hi};
    }
    cl.action = a;
    cl.rls = scaledIdentity(cfg_.deltaRls);
    cl.error = cfg_.epsI;
    cl.noise = cfg_.muI;
    cl.fitness = cfg_.fI;
    cl.timestamp = time_;
    return cl;
}

std::vector<std::uint32_t> Xcs::matchSetWithCovering(const State& s, Rng& rng) {
    for (;;) {
        auto ms = matchSet(s);
        std::array<bool, kNumActions> present{};
        int setNum = 0;
        for (auto i : ms) {
            present[static_cast<std::size_t>(toIndex(pop_[i].action))] = true;
            setNum += pop_[i].numerosity;
        }
        bool covered = false;
        for (int a = 0; a < kNumActions; ++a) {
            if (present[static_cast<std::size_t>(a)]) continue;
            Classifier cl = coveringClassifier(s, actionFromIndex(a), rng);
            cl.actionSetSize = setNum + 1;
            insert(std::move(cl));
            covered = true;
        }
        if (!covered) return ms;
        deleteIfNeeded(rng);
    }
}

PredictionArray Xcs::predictionArray(std::span<const std::uint32_t> matchSet, const State& s) const {
    const Features x = augment(s, cfg_.x0);
    std::array<double, kNumActions> num{};
    std::array<double, kNumActions> den{};
    for (auto i : matchSet) {
        const Classifier& cl = pop_[i];
        if (cl.numerosity <= 0) continue;
        const auto a = static_cast<std::size_t>(toIndex(cl.action));
        num[a] += cl.fitness * cl.prediction(x);
        den[a] += cl.fitness;
    }
    PredictionArray pa;
    for (std::size_t a = 0; a < pa.size(); ++a)
        if (den[a] > 0.0) pa[a] = num[a] / den[a];
    return pa;
}

Decision Xcs::greedyAction(const State& s) const {
    const auto ms = matchSet(s);
    if (ms.empty()) return std::nullopt;
    return bestAction(predictionArray(ms, s));
}

Policy Xcs::greedyPolicy() const {
    return [this](const State& s) { return greedyAction(s); };
}

void Xcs::updateSet(std::span<const std::uint32_t> actionSet, const State& s, double payoff) {
    const Features x = augment(s, cfg_.x0);
    int setNum = 0;
    for (auto i : actionSet) setNum += pop_[i].numerosity;
    if (setNum == 0) return;

    for (auto i : actionSet) {
        Classifier& cl = pop_[i];
        if (cl.numerosity <= 0) continue;
        ++cl.experience;
        const double absErr = std::abs(payoff - cl.prediction(x));
        if (cl.experience < 1.0 / cfg_.beta)
            cl.actionSetSize += (setNum - cl.actionSetSize) / cl.experience;
        else
            cl.actionSetSize += cfg_.beta * (setNum - cl.actionSetSize);
        if (cfg_.noiseTracking) {
            cl.noise += cfg_.betaEps * (absErr - cl.noise);
            cl.error += cfg_.beta * (std::max(0.0, absErr - cl.noise) - cl.error);
        } else {
            cl.error += cfg_.beta * (absErr - cl.error);
        }
        rlsUpdate(cl.weights, cl.rls, x, payoff, cfg_.lambdaRls);
        double trace = 0.0;
        for (std::size_t d = 0; d < kDim; ++d) trace += cl.rls[d * kDim + d];
        if (!(trace < kRlsTraceLimit)) cl.rls = scaledIdentity(cfg_.deltaRls);
    }

    // Relative accuracy fitness update.
    std::vector<double> kappa;
    kappa.reserve(actionSet.size());
    double accSum = 0.0;
    for (auto i : actionSet) {
        const Classifier& cl = pop_[i];
        double k = 0.0;
        if (cl.numerosity > 0)
            k = cl.error < cfg_.eps0 ? 1.0 : cfg_.alpha * std::pow(cl.error / cfg_.eps0, -cfg_.nu);
        kappa.push_back(k);
        accSum += k * cl.numerosity;
    }
    if (accSum <= 0.0) return;
    for (std::size_t n = 0; n < actionSet.size(); ++n) {
        Classifier& cl = pop_[actionSet[n]];
        if (cl.numerosity <= 0) continue;
        cl.fitness += cfg_.beta * (kappa[n] * cl.numerosity / accSum - cl.fitness);
    }
}

std::size_t Xcs::selectParent(std::span<const std::uint32_t> actionSet, Rng& rng) const {
    // Tournament over microclassifiers, each entering with probability tau.
    std::optional<std::size_t> winner;
    double bestFitness = 0.0;
    for (auto i : actionSet) {
        const Classifier& cl = pop_[i];
        if (cl.numerosity <= 0) continue;
        const double pEnter = 1.0 - std::pow(1.0 - cfg_.tau, cl.numerosity);
        if (!rng.bernoulli(pEnter)) continue;
        const double microFitness = cl.fitness / cl.numerosity;
        if (!winner || microFitness > bestFitness) {
            winner = i;
            bestFitness = microFitness;
        }
    }
    if (winner) return *winner;
    std::vector<std::uint32_t> live;
    for (auto i : actionSet)
        if (pop_[i].numerosity > 0) live.push_back(i);
    return live[rng.index(live.size())];
}

bool Xcs::subsumes(const Classifier& general, const Classifier& specific) const noexcept {
    return general.numerosity > 0 && general.action == specific.action && general.experience > cfg_.thetaSub &&
           general.error < cfg_.eps0 && general.condition.contains(specific.condition);
}

void Xcs::mutateChild(Classifier& cl, Rng& rng) const {
    const int maxCoord = gridSize_ - 1;
    for (auto& pair : cl.condition.dims) {
        for (int* allele : {&pair.p, &pair.q}) {
            if (!rng.bernoulli(cfg_.muMut)) continue;
            const int shift = rng.uniformInt(0, cfg_.m0) * (rng.bernoulli(0.5) ? 1 : -1);
            *allele = std::clamp(*allele + shift, 0, maxCoord);
        }
    }
    if (rng.bernoulli(cfg_.muMut)) {
        int next = rng.uniformInt(0, kNumActions - 2);
        if (next >= toIndex(cl.action)) ++next;
        cl.action = actionFromIndex(next);
    }
}

bool Xcs::runGa(std::span<const std::uint32_t> actionSet, Rng& rng) {
    double tsSum = 0.0;
    int setNum = 0;
    for (auto i : actionSet) {
        const Classifier& cl = pop_[i];
        tsSum += static_cast<double>(cl.timestamp) * cl.numerosity;
        setNum += cl.numerosity;
    }
    if (setNum == 0) return false;
    if (static_cast<double>(time_) - tsSum / setNum < cfg_.thetaGa) return false;
    for (auto i : actionSet) pop_[i].timestamp = time_;

    const std::size_t p1 = selectParent(actionSet, rng);
    const std::size_t p2 = selectParent(actionSet, rng);
    // Copies: inserting children may reallocate pop_.
    const Classifier parent1 = pop_[p1];
    const Classifier parent2 = pop_[p2];

    std::array<Classifier, 2> children{parent1, parent2};
    for (auto& c : children) {
        c.numerosity = 1;
        c.experience = 0;
        c.timestamp = time_;
        c.rls = scaledIdentity(cfg_.deltaRls);
    }
    children[0].fitness = parent1.fitness / parent1.numerosity;
    children[1].fitness = parent2.fitness / parent2.numerosity;

    if (rng.bernoulli(cfg_.chi)) {
        // Two-point crossover over the allele string p0 q0 p1 q1.
        constexpr int kAlleles = 2 * kStateDims;
        int from = rng.uniformInt(0, kAlleles);
        int to = rng.uniformInt(0, kAlleles);
        if (from > to) std::swap(from, to);
        auto allele = [](Classifier& c, int k) -> int& {
            auto& pair = c.condition.dims[k / 2];
            return k % 2 == 0 ? pair.p : pair.q;
        };
        for (int k = from; k < to; ++k) std::swap(allele(children[0], k), allele(children[1], k));
        Features w{};
        for (std::size_t d = 0; d < kDim; ++d) w[d] = 0.5 * (parent1.weights[d] + parent2.weights[d]);
        const double err = 0.5 * (parent1.error + parent2.error);
        const double noise = 0.5 * (parent1.noise + parent2.noise);
        const double fit = 0.5 * (children[0].fitness + children[1].fitness);
        for (auto& c : children) {
            c.weights = w;
            c.error = err;
            c.noise = noise;
            c.fitness = fit;
        }
    }
    for (auto& c : children) {
        c.fitness *= 0.1;
        mutateChild(c, rng);
    }

    for (auto& c : children) {
        if (subsumes(pop_[p1], c))
            ++pop_[p1].numerosity;
        else if (subsumes(pop_[p2], c))
            ++pop_[p2].numerosity;
        else
            insert(c);
    }
    deleteIfNeeded(rng);
    ++gaCount_;
    return true;
}

void Xcs::insert(Classifier cl) {
    for (auto& existing : pop_) {
        if (existing.numerosity > 0 && existing.action == cl.action &&
            existing.condition.samePhenotype(cl.condition)) {
            existing.numerosity += cl.numerosity;
            return;
        }
    }
    pop_.push_back(std::move(cl));
}

void Xcs::deleteIfNeeded(Rng& rng) {
    int total = numerositySum();
    while (total > cfg_.N) {
        double fitSum = 0.0;
        for (const auto& cl : pop_)
            if (cl.numerosity > 0) fitSum += cl.fitness;
        const double meanFitness = fitSum / total;
        std::vector<double> votes(pop_.size(), 0.0);
        double voteSum = 0.0;
        for (std::size_t i = 0; i < pop_.size(); ++i) {
            const Classifier& cl = pop_[i];
            if (cl.numerosity <= 0) continue;
            double vote = cl.actionSetSize * cl.numerosity;
            const double micro = cl.fitness / cl.numerosity;
            if (cl.experience > cfg_.thetaDel && micro < cfg_.delta * meanFitness) vote *= meanFitness / micro;
            votes[i] = vote;
            voteSum += vote;
        }
        double point = rng.uniform01() * voteSum;
        std::size_t chosen = pop_.size();
        for (std::size_t i = 0; i < pop_.size(); ++i) {
            if (votes[i] <= 0.0) continue;
            chosen = i;
            point -= votes[i];
            if (point <= 0.0) break;
        }
        if (chosen == pop_.size()) return;
        --pop_[chosen].numerosity;
        --total;
    }
}

std::vector<std::uint32_t> Xcs::compact() {
    std::vector<std::uint32_t> remap(pop_.size(), kRemoved);
    std::size_t out = 0;
    for (std::size_t i = 0; i < pop_.size(); ++i) {
        if (pop_[i].numerosity <= 0) continue;
        remap[i] = static_cast<std::uint32_t>(out);
        if (out != i) pop_[out] = std::move(pop_[i]);
        ++out;
    }
    pop_.resize(out);
    return remap;
}

std::uint64_t XcsTrainer::step(Rng& rng) {
    Xcs& xcs = *xcs_;
    const EpisodicMdp& env = *env_;
    const auto gaBefore = xcs.gaInvocationCount();
    if (!active_) {
        const auto starts = env.initialStates();
        state_ = starts[rng.index(starts.size())];
        explore_ = rng.bernoulli(0.5);
        t_ = 0;
        hasPrev_ = false;
        prevSet_.clear();
        active_ = true;
        ++episodes_;
    }

    const auto ms = xcs.matchSetWithCovering(state_, rng);
    const PredictionArray pa = xcs.predictionArray(ms, state_);
    Action action = *bestAction(pa);
    if (explore_ && rng.bernoulli(xcs.config().exploreEps)) action = actionFromIndex(rng.uniformInt(0, kNumActions - 1));
    std::vector<std::uint32_t> actionSet;
    for (auto i : ms)
        if (xcs.population()[i].action == action) actionSet.push_back(i);
    double maxPrediction = 0.0;
    if (auto a = bestAction(pa)) maxPrediction = *pa[static_cast<std::size_t>(toIndex(*a))];

    const StepOutcome out = env.step(state_, action, rng);
    ++t_;
    ++steps_;

    if (hasPrev_) {
        xcs.updateSet(prevSet_, prevState_, prevReward_ + env.gamma() * maxPrediction);
        xcs.runGa(prevSet_, rng);
    }
    if (out.terminal) {
        xcs.updateSet(actionSet, state_, out.reward);
        xcs.runGa(actionSet, rng);
        active_ = false;
        prevSet_.clear();
    } else if (t_ >= env.tMax()) {
        active_ = false;
        prevSet_.clear();
    } else {
        prevSet_ = std::move(actionSet);
        prevState_ = state_;
        prevReward_ = out.reward;
        hasPrev_ = true;
        state_ = out.next;
    }

    const auto remap = xcs.compact();
    std::vector<std::uint32_t> kept;
    kept.reserve(prevSet_.size());
    for (auto i : prevSet_)
        if (remap[i] != Xcs::kRemoved) kept.push_back(remap[i]);
    prevSet_ = std::move(kept);
    xcs.tick();
    return xcs.gaInvocationCount() - gaBefore;
}

void to_json(nlohmann::json& j, const Classifier& cl) {
    j = nlohmann::json{{"condition", cl.condition},
                       {"action", toIndex(cl.action)},
                       {"weights", cl.weights},
                       {"error", cl.error},
                       {"noise", cl.noise},
                       {"fitness", cl.fitness},
                       {"numerosity", cl.numerosity},
                       {"experience", cl.experience},
                       {"action_set_size", cl.actionSetSize},
                       {"timestamp", cl.timestamp}};
}

void from_json(const nlohmann::json& j, Classifier& cl) {
    RuleGene g;
    from_json(j, g);
    cl.condition = g.condition;
    cl.action = g.action;
    const auto w = j.at("weights").get<std::vector<double>>();
    if (w.size() != kDim) throw std::invalid_argument("weights must have d + 1 entries");
    std::copy(w.begin(), w.end(), cl.weights.begin());
    cl.error = j.value("error", 0.0);
    cl.noise = j.value("noise", 0.0);
    cl.fitness = j.value("fitness", 1.0);
    cl.numerosity = j.value("numerosity", 1);
    cl.experience = j.value("experience", 0);
    cl.actionSetSize = j.value("action_set_size", 1.0);
    cl.timestamp = j.value("timestamp", std::uint64_t{0});
    cl.rls = scaledIdentity(10.0);
    if (cl.numerosity < 1) throw std::invalid_argument("numerosity must be >= 1");
}

}  // namespace lcsbench
