#include "lcsbench/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>

#include "lcsbench/error.hpp"

namespace lcsbench {

double QTable::value(const State& s) const {
    const auto& r = row(s);
    return *std::max_element(r.begin(), r.end());
}

Action QTable::greedy(const State& s) const {
    const auto& r = row(s);
    return actionFromIndex(static_cast<int>(std::max_element(r.begin(), r.end()) - r.begin()));
}

Policy ValueIterationResult::policy(const FrozenLake& env) const {
    return [this, &env](const State& s) -> Decision {
        if (env.isTerminal(s)) return std::nullopt;
        return q.greedy(s);
    };
}

namespace {

// One Bellman backup of every action at state s, reading V from `prev`.
std::array<double, kNumActions> backup(const FrozenLake& env, const QTable& prev, const State& s) {
    std::array<double, kNumActions> out{};
    for (int a = 0; a < kNumActions; ++a) {
        double acc = 0.0;
        for (const Transition& t : env.transitionModel(s, actionFromIndex(a)))
            acc += t.probability * (t.reward + (t.terminal ? 0.0 : env.gamma() * prev.value(t.next)));
        out[static_cast<std::size_t>(a)] = acc;
    }
    return out;
}

double sweepSerial(const FrozenLake& env, const std::vector<State>& states, const QTable& prev, QTable& next) {
    double delta = 0.0;
    for (const State& s : states) {
        const auto r = backup(env, prev, s);
        for (std::size_t a = 0; a < r.size(); ++a) delta = std::max(delta, std::abs(r[a] - prev.row(s)[a]));
        next.row(s) = r;
    }
    return delta;
}

double sweepParallel(const FrozenLake& env, const std::vector<State>& states, const QTable& prev, QTable& next) {
    double delta = 0.0;
    const auto n = static_cast<std::ptrdiff_t>(states.size());
#pragma omp parallel for schedule(static) reduction(max : delta)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const State& s = states[static_cast<std::size_t>(i)];
        const auto r = backup(env, prev, s);
        for (std::size_t a = 0; a < r.size(); ++a) delta = std::max(delta, std::abs(r[a] - prev.row(s)[a]));
        next.row(s) = r;
    }
    return delta;
}

}  // namespace

ValueIterationResult valueIteration(const FrozenLake& env, double tol, Execution exec) {
    if (!(tol > 0.0)) throw ConfigError("value iteration tolerance must be positive");
    const std::vector<State> states = env.map().frozenCells();
    QTable prev(env.gridSize());
    QTable next(env.gridSize());
    ValueIterationResult result;
    for (;;) {
        const double delta = exec == Execution::Parallel ? sweepParallel(env, states, prev, next)
                                                         : sweepSerial(env, states, prev, next);
        ++result.sweeps;
        result.sweepDeltas.push_back(delta);
        std::swap(prev, next);
        if (delta <= tol) break;
    }
    result.q = std::move(prev);
    result.residual = result.sweepDeltas.back();
    return result;
}

std::vector<std::optional<int>> bfsDistances(const GridMap& map) {
    const int m = map.size();
    std::vector<std::optional<int>> dist(static_cast<std::size_t>(m * m));
    auto idx = [m](const State& s) { return static_cast<std::size_t>(s.y * m + s.x); };
    std::deque<State> queue{map.goal()};
    std::vector<int> reached(static_cast<std::size_t>(m * m), -1);
    reached[idx(map.goal())] = 0;
    constexpr std::array<std::array<int, 2>, 4> kMoves{{{-1, 0}, {0, 1}, {1, 0}, {0, -1}}};
    while (!queue.empty()) {
        const State s = queue.front();
        queue.pop_front();
        for (const auto& mv : kMoves) {
            const State n{s.x + mv[0], s.y + mv[1]};
            if (!map.inBounds(n) || map.at(n) != Cell::Frozen || reached[idx(n)] >= 0) continue;
            reached[idx(n)] = reached[idx(s)] + 1;
            dist[idx(n)] = reached[idx(n)];
            queue.push_back(n);
        }
    }
    return dist;
}

void requireGoalReachable(const GridMap& map) {
    const auto dist = bfsDistances(map);
    for (const State& s : map.frozenCells())
        if (!dist[static_cast<std::size_t>(s.y * map.size() + s.x)])
            throw ConfigError("frozen cell (" + std::to_string(s.x) + "," + std::to_string(s.y) +
                              ") cannot reach the goal");
}

std::vector<State> buildTestSequence(const EpisodicMdp& env, int reps) {
    if (reps < 1) throw ConfigError("z repetitions must be positive");
    const auto starts = env.initialStates();
    const int n = env.isDeterministic() ? 1 : reps;
    std::vector<State> z;
    z.reserve(starts.size() * static_cast<std::size_t>(n));
    for (int r = 0; r < n; ++r) z.insert(z.end(), starts.begin(), starts.end());
    return z;
}

double rolloutOtp(const FrozenLake& env, const ValueIterationResult& vi, std::span<const State> z, std::uint64_t seed) {
    Rng rng(seed);
    return evaluatePerformance(env, vi.policy(env), z, rng);
}

OtpResult computeOtp(const FrozenLake& env, std::span<const State> z, std::uint64_t seed,
                     const ValueIterationResult* vi) {
    if (z.empty()) throw ConfigError("test sequence z must not be empty");
    ValueIterationResult local;
    if (!vi) {
        local = valueIteration(env);
        vi = &local;
    }
    OtpResult out;
    std::map<State, std::pair<double, int>> perStart;
    double total = 0.0;
    if (env.isDeterministic()) {
        out.exact = true;
        for (const State& s : z) {
            const double v = vi->q.value(s);
            total += v;
            auto& acc = perStart[s];
            acc.first += v;
            ++acc.second;
        }
    } else {
        Rng rng(seed);
        const Policy policy = vi->policy(env);
        for (const State& s : z) {
            const double g = rollout(env, policy, s, rng).ret;
            total += g;
            auto& acc = perStart[s];
            acc.first += g;
            ++acc.second;
        }
    }
    out.otp = total / static_cast<double>(z.size());
    for (const auto& [s, acc] : perStart) out.perStartReturns.emplace_back(s, acc.first / acc.second);
    return out;
}

}  // namespace lcsbench
