#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lcsbench/mdp.hpp"

namespace lcsbench {

enum class Cell : char { Frozen = 'F', Hole = 'H', Goal = 'G' };

/// Square FrozenLake grid. Text form: one row per line, characters F, H, G
/// ('S' is read as frozen for compatibility with the classic layouts).
class GridMap {
public:
    /// Throws ConfigError on malformed text, non-square grids, or a goal
    /// count other than one.
    static GridMap parse(std::string_view text);
    static GridMap load(const std::filesystem::path& path);

    /// Bundled layouts for M in {4, 8, 12}.
    static GridMap defaultMap(int size);

    int size() const noexcept { return size_; }
    Cell at(const State& s) const { return cells_[static_cast<std::size_t>(s.y * size_ + s.x)]; }
    bool inBounds(const State& s) const noexcept { return s.x >= 0 && s.y >= 0 && s.x < size_ && s.y < size_; }
    State goal() const noexcept { return goal_; }

    /// Frozen cells in row-major order.
    std::vector<State> frozenCells() const;
    std::string toString() const;

private:
    int size_ = 0;
    std::vector<Cell> cells_;
    State goal_;
};

/// Default episode cap for the bundled grid sizes (150, 300, 450); other
/// sizes get 37.5 * M rounded.
int defaultTMax(int gridSize);

struct Transition {
    State next;
    double probability = 0.0;
    double reward = 0.0;
    bool terminal = false;
};

/// FrozenLake with perpendicular slipping: the intended move is realised with
/// probability 1 - pSlip and each perpendicular move with pSlip / 2. Moves off
/// the grid leave the agent in place. Reward 1 on entering the goal.
class FrozenLake final : public EpisodicMdp {
public:
    /// Throws ConfigError for pSlip outside [0, 1), gamma outside [0, 1],
    /// tMax < 1, or a map without frozen cells.
    FrozenLake(GridMap map, double pSlip, double gamma = 0.95, std::optional<int> tMax = std::nullopt);

    double gamma() const noexcept override { return gamma_; }
    int tMax() const noexcept override { return tMax_; }
    std::span<const State> initialStates() const noexcept override { return initial_; }
    bool isTerminal(const State& s) const override { return map_.at(s) != Cell::Frozen; }
    bool isDeterministic() const noexcept override { return pSlip_ == 0.0; }
    StepOutcome step(const State& s, Action a, Rng& rng) const override;

    /// Exact successor distribution of step(); duplicate successors merged,
    /// sorted by state.
    std::vector<Transition> transitionModel(const State& s, Action a) const;

    const GridMap& map() const noexcept { return map_; }
    int gridSize() const noexcept { return map_.size(); }
    double pSlip() const noexcept { return pSlip_; }

    /// Move one cell in `dir`, clamped to the grid.
    State move(const State& s, Action dir) const noexcept;

private:
    StepOutcome outcome(const State& s, Action dir) const;

    GridMap map_;
    double pSlip_;
    double gamma_;
    int tMax_;
    std::vector<State> initial_;
};

/// The two directions perpendicular to `a`, lower ActionId first.
std::array<Action, 2> perpendicular(Action a) noexcept;

}  // namespace lcsbench
