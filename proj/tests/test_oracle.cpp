#include <doctest.h>

#include <cmath>

#include "lcsbench/error.hpp"
#include "lcsbench/oracle.hpp"

using namespace lcsbench;

namespace {

std::optional<int> dist(const std::vector<std::optional<int>>& d, const GridMap& m, State s) {
    return d[static_cast<std::size_t>(s.y * m.size() + s.x)];
}

}  // namespace

TEST_CASE("BFS distances on the 4x4 map") {
    const auto map = GridMap::defaultMap(4);
    const auto d = bfsDistances(map);
    CHECK(dist(d, map, {0, 0}) == 6);
    CHECK(dist(d, map, {2, 3}) == 1);
    CHECK(dist(d, map, {3, 0}) == 5);
    CHECK_FALSE(dist(d, map, {1, 1}).has_value());
    CHECK_FALSE(dist(d, map, {3, 3}).has_value());
    for (int m : {8, 12}) CHECK_NOTHROW(requireGoalReachable(GridMap::defaultMap(m)));
}

TEST_CASE("unreachable cells are rejected") {
    const auto map = GridMap::parse("FFH\nFHF\nHFG\n");
    CHECK_THROWS_AS(requireGoalReachable(map), ConfigError);
}

TEST_CASE("deterministic optimal values follow the BFS distance") {
    for (int m : {4, 8, 12}) {
        FrozenLake env(GridMap::defaultMap(m), 0.0);
        const auto vi = valueIteration(env);
        const auto d = bfsDistances(env.map());
        for (const State& s : env.initialStates()) {
            const double expected = std::pow(0.95, *dist(d, env.map(), s) - 1);
            CHECK(std::abs(vi.q.value(s) - expected) < 1e-10);
        }
    }
}

TEST_CASE("optimal policy reaches the goal in the BFS number of steps") {
    FrozenLake env(GridMap::defaultMap(8), 0.0);
    const auto vi = valueIteration(env);
    const auto d = bfsDistances(env.map());
    Rng rng(1);
    for (const State& s : env.initialStates()) {
        const auto r = rollout(env, vi.policy(env), s, rng);
        CHECK(static_cast<int>(r.trajectory.steps.size()) == *dist(d, env.map(), s));
        CHECK(r.trajectory.steps.back().reward == 1.0);
    }
}

TEST_CASE("value iteration satisfies the Bellman equation on slippery maps") {
    FrozenLake env(GridMap::defaultMap(4), 0.3);
    const auto vi = valueIteration(env, 1e-12);
    CHECK(vi.residual <= 1e-12);
    for (const State& s : env.initialStates()) {
        for (int a = 0; a < kNumActions; ++a) {
            double q = 0.0;
            for (const auto& t : env.transitionModel(s, actionFromIndex(a)))
                q += t.probability * (t.reward + (t.terminal ? 0.0 : 0.95 * vi.q.value(t.next)));
            CHECK(std::abs(q - vi.q.q(s, actionFromIndex(a))) < 1e-10);
        }
    }
    // Sweep deltas contract.
    for (std::size_t i = 1; i < vi.sweepDeltas.size(); ++i) CHECK(vi.sweepDeltas[i] <= vi.sweepDeltas[i - 1] + 1e-15);
}

TEST_CASE("serial and parallel sweeps agree exactly") {
    for (double p : {0.0, 0.3}) {
        FrozenLake env(GridMap::defaultMap(12), p);
        const auto a = valueIteration(env, 1e-10, Execution::Serial);
        const auto b = valueIteration(env, 1e-10, Execution::Parallel);
        CHECK(a.sweeps == b.sweeps);
        for (const State& s : env.initialStates())
            for (int k = 0; k < kNumActions; ++k)
                CHECK(a.q.q(s, actionFromIndex(k)) == b.q.q(s, actionFromIndex(k)));
    }
    CHECK_THROWS_AS(valueIteration(FrozenLake(GridMap::defaultMap(4), 0.0), 0.0), ConfigError);
}

TEST_CASE("test sequence construction") {
    FrozenLake det(GridMap::defaultMap(4), 0.0);
    CHECK(buildTestSequence(det, 30).size() == 11);
    FrozenLake slip(GridMap::defaultMap(4), 0.1);
    const auto z = buildTestSequence(slip, 10);
    CHECK(z.size() == 110);
    CHECK(z[11] == z[0]);
    CHECK(buildTestSequence(FrozenLake(GridMap::defaultMap(12), 0.3), 30).size() == 3420);
    CHECK_THROWS_AS(buildTestSequence(det, 0), ConfigError);
}

TEST_CASE("OTP closed form equals the rollout estimate on deterministic maps") {
    FrozenLake env(GridMap::defaultMap(4), 0.0);
    const auto z = buildTestSequence(env, 30);
    const auto vi = valueIteration(env);
    const auto otp = computeOtp(env, z, 7, &vi);
    CHECK(otp.exact);
    CHECK(std::abs(otp.otp - rolloutOtp(env, vi, z, 7)) < 1e-12);
    double sum = 0.0;
    for (const State& s : z) sum += vi.q.value(s);
    CHECK(otp.otp == doctest::Approx(sum / 11.0));
    CHECK(otp.perStartReturns.size() == 11);
}

TEST_CASE("stochastic OTP is reproducible and close to the mean optimal value") {
    FrozenLake env(GridMap::defaultMap(4), 0.3);
    const auto z = buildTestSequence(env, 30);
    const auto a = computeOtp(env, z, 42);
    const auto b = computeOtp(env, z, 42);
    CHECK_FALSE(a.exact);
    CHECK(a.otp == b.otp);
    const auto vi = valueIteration(env);
    double v = 0.0;
    for (const State& s : env.initialStates()) v += vi.q.value(s);
    v /= static_cast<double>(env.initialStates().size());
    CHECK(a.otp == doctest::Approx(v).epsilon(0.15));
}
