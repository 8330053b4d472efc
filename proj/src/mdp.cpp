#include "lcsbench/mdp.hpp"

#include "lcsbench/error.hpp"

namespace lcsbench {

std::string_view actionName(Action a) noexcept {
    switch (a) {
        case Action::Left: return "left";
        case Action::Down: return "down";
        case Action::Right: return "right";
        case Action::Up: return "up";
    }
    return "?";
}

double discountedReturn(std::span<const double> rewards, double gamma) {
    double ret = 0.0;
    double discount = 1.0;
    for (double r : rewards) {
        ret += discount * r;
        discount *= gamma;
    }
    return ret;
}

RolloutResult rollout(const EpisodicMdp& env, const Policy& policy, const State& initial, Rng& rng) {
    RolloutResult result;
    auto& traj = result.trajectory;
    const double gamma = env.gamma();
    double discount = 1.0;
    State s = initial;
    for (int t = 0; t < env.tMax(); ++t) {
        const Decision d = policy(s);
        if (!d) {
            traj.truncated = true;
            traj.nullAction = true;
            return result;
        }
        const StepOutcome out = env.step(s, *d, rng);
        traj.steps.push_back({s, *d, out.reward, {}});
        result.ret += discount * out.reward;
        discount *= gamma;
        if (out.terminal) return result;
        s = out.next;
    }
    traj.truncated = true;
    return result;
}

namespace {

// Non-recording rollout; returns nullopt on a null decision.
std::optional<double> episodeReturn(const EpisodicMdp& env, const Policy& policy, State s, Rng& rng) {
    const double gamma = env.gamma();
    double ret = 0.0;
    double discount = 1.0;
    for (int t = 0; t < env.tMax(); ++t) {
        const Decision d = policy(s);
        if (!d) return std::nullopt;
        const StepOutcome out = env.step(s, *d, rng);
        ret += discount * out.reward;
        discount *= gamma;
        if (out.terminal) break;
        s = out.next;
    }
    return ret;
}

}  // namespace

PerformanceResult evaluatePerformanceDetailed(const EpisodicMdp& env, const Policy& policy,
                                              std::span<const State> z, Rng& rng) {
    if (z.empty()) throw ConfigError("test sequence z must not be empty");
    PerformanceResult result;
    double total = 0.0;
    for (const State& start : z) {
        ++result.episodes;
        const auto g = episodeReturn(env, policy, start, rng);
        if (!g) {
            result.nullAction = true;
            result.performance = 0.0;
            return result;
        }
        total += *g;
    }
    result.performance = total / static_cast<double>(z.size());
    return result;
}

double evaluatePerformance(const EpisodicMdp& env, const Policy& policy, std::span<const State> z, Rng& rng) {
    return evaluatePerformanceDetailed(env, policy, z, rng).performance;
}

}  // namespace lcsbench
