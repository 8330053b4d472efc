#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "lcsbench/rng.hpp"

namespace lcsbench {

/// Allocentric grid position: x = column, y = row.
struct State {
    int x = 0;
    int y = 0;
    friend constexpr auto operator<=>(const State&, const State&) = default;
};

inline constexpr int kStateDims = 2;
inline constexpr int kNumActions = 4;

enum class Action : std::uint8_t { Left = 0, Down = 1, Right = 2, Up = 3 };

constexpr int toIndex(Action a) noexcept { return static_cast<int>(a); }
constexpr Action actionFromIndex(int i) noexcept { return static_cast<Action>(i); }
std::string_view actionName(Action a) noexcept;

/// An action, or std::nullopt when no rule matched the state.
using Decision = std::optional<Action>;

/// A policy maps states to decisions. Policies must not mutate shared state.
using Policy = std::function<Decision(const State&)>;

struct StepOutcome {
    State next;
    double reward = 0.0;
    bool terminal = false;
};

/// Episodic MDP contract consumed by rollouts and the learners.
class EpisodicMdp {
public:
    virtual ~EpisodicMdp() = default;

    virtual double gamma() const noexcept = 0;
    virtual int tMax() const noexcept = 0;
    virtual std::span<const State> initialStates() const noexcept = 0;
    virtual bool isTerminal(const State& s) const = 0;
    virtual bool isDeterministic() const noexcept = 0;
    virtual StepOutcome step(const State& s, Action a, Rng& rng) const = 0;
};

struct TrajectoryStep {
    State state;
    Action action = Action::Left;
    double reward = 0.0;
    std::vector<std::uint32_t> actionSet;  // only filled by strength-based reinforcement
};

struct Trajectory {
    std::vector<TrajectoryStep> steps;
    bool truncated = false;   // ended by a null decision or by t_max
    bool nullAction = false;  // ended by a null decision
};

struct RolloutResult {
    double ret = 0.0;
    Trajectory trajectory;
};

/// Sum of gamma^t * r_t, t starting at 0. Empty input gives 0.
double discountedReturn(std::span<const double> rewards, double gamma);

/// Simulates one episode from `initial` until a terminal cell, t_max steps
/// or a null decision.
RolloutResult rollout(const EpisodicMdp& env, const Policy& policy, const State& initial, Rng& rng);

struct PerformanceResult {
    double performance = 0.0;
    std::size_t episodes = 0;  // rollouts actually simulated
    bool nullAction = false;
};

/// Mean return over the test sequence `z`. Any null decision zeroes the whole
/// evaluation and stops further rollouts. Throws ConfigError on empty `z`.
PerformanceResult evaluatePerformanceDetailed(const EpisodicMdp& env, const Policy& policy,
                                              std::span<const State> z, Rng& rng);

double evaluatePerformance(const EpisodicMdp& env, const Policy& policy, std::span<const State> z, Rng& rng);

}  // namespace lcsbench
