#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "lcsbench/execution.hpp"
#include "lcsbench/frozenlake.hpp"

namespace lcsbench {

/// Action values over an M x M grid; terminal cells hold zeros.
class QTable {
public:
    explicit QTable(int gridSize = 0)
        : size_(gridSize), q_(static_cast<std::size_t>(gridSize * gridSize), std::array<double, kNumActions>{}) {}

    int gridSize() const noexcept { return size_; }
    double q(const State& s, Action a) const { return row(s)[static_cast<std::size_t>(toIndex(a))]; }
    double& q(const State& s, Action a) { return row(s)[static_cast<std::size_t>(toIndex(a))]; }
    double value(const State& s) const;
    /// Greedy action, ties to the lowest ActionId.
    Action greedy(const State& s) const;

    const std::array<double, kNumActions>& row(const State& s) const { return q_[index(s)]; }
    std::array<double, kNumActions>& row(const State& s) { return q_[index(s)]; }

private:
    std::size_t index(const State& s) const noexcept { return static_cast<std::size_t>(s.y * size_ + s.x); }
    int size_;
    std::vector<std::array<double, kNumActions>> q_;
};

struct ValueIterationResult {
    QTable q;
    int sweeps = 0;
    double residual = 0.0;             // max-norm change of the final sweep
    std::vector<double> sweepDeltas;   // max-norm change per sweep

    Policy policy(const FrozenLake& env) const;
};

/// Synchronous (Jacobi) value iteration until the max-norm change of a sweep
/// is at most `tol`. The parallel sweep and its serial reference agree exactly.
ValueIterationResult valueIteration(const FrozenLake& env, double tol = 1e-10, Execution exec = Execution::Parallel);

/// Hole-avoiding shortest move counts to the goal for every frozen cell
/// (row-major over the grid, nullopt for non-frozen or unreachable cells).
std::vector<std::optional<int>> bfsDistances(const GridMap& map);

/// Throws ConfigError naming the first frozen cell that cannot reach the goal.
void requireGoalReachable(const GridMap& map);

/// One enumeration of S_I for deterministic environments, `reps`
/// enumerations otherwise.
std::vector<State> buildTestSequence(const EpisodicMdp& env, int reps);

struct OtpResult {
    double otp = 0.0;
    std::vector<std::pair<State, double>> perStartReturns;  // mean return per distinct start
    bool exact = false;                                      // closed form (deterministic env)
};

/// Optimal testing performance over `z`: closed form from V* on deterministic
/// environments, otherwise the mean rollout return of the optimal policy
/// using a stream seeded with `seed`.
OtpResult computeOtp(const FrozenLake& env, std::span<const State> z, std::uint64_t seed,
                     const ValueIterationResult* vi = nullptr);

/// Mean rollout return of the optimal policy over `z`, regardless of determinism.
double rolloutOtp(const FrozenLake& env, const ValueIterationResult& vi, std::span<const State> z, std::uint64_t seed);

}  // namespace lcsbench
