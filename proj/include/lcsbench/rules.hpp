#pragma once

#include <algorithm>
#include <array>
#include <concepts>
#include <cstdint>
#include <span>
#include <vector>

#include <json.hpp>

#include "lcsbench/mdp.hpp"
#include "lcsbench/rng.hpp"

namespace lcsbench {

/// One dimension of an unordered-bound hyperrectangle. The two alleles carry
/// no order; the interval is [min(p, q), max(p, q)].
struct AllelePair {
    int p = 0;
    int q = 0;

    constexpr int lo() const noexcept { return std::min(p, q); }
    constexpr int hi() const noexcept { return std::max(p, q); }
    constexpr bool contains(int v) const noexcept { return lo() <= v && v <= hi(); }
    friend constexpr bool operator==(const AllelePair&, const AllelePair&) = default;
};

struct Condition {
    std::array<AllelePair, kStateDims> dims{};

    constexpr bool matches(const State& s) const noexcept { return dims[0].contains(s.x) && dims[1].contains(s.y); }

    /// Same phenotype: equal intervals in every dimension, regardless of allele order.
    bool samePhenotype(const Condition& o) const noexcept;
    /// Every state matched by `o` is matched by this condition.
    bool contains(const Condition& o) const noexcept;

    friend constexpr bool operator==(const Condition&, const Condition&) = default;
};

inline bool matches(const Condition& c, const State& s) noexcept { return c.matches(s); }

struct RuleGene {
    Condition condition;
    Action action = Action::Left;
    friend constexpr bool operator==(const RuleGene&, const RuleGene&) = default;
};

inline const RuleGene& geneOf(const RuleGene& r) noexcept { return r; }

/// Smallest p such that a geometric variable on {1, 2, ...} puts at least 99%
/// of its mass on [1, floor(w / 2)]. Throws std::invalid_argument for w < 2.
double geometricParam(int width);

/// Samples condition-mutation magnitudes for one state dimension.
class GeometricMutator {
public:
    explicit GeometricMutator(int width);
    double p() const noexcept { return p_; }
    int width() const noexcept { return width_; }
    int sampleMagnitude(Rng& rng) const { return rng.geometric(p_); }

private:
    int width_;
    double p_;
};

/// Per-dimension mutators for an M x M grid.
std::array<GeometricMutator, kStateDims> gridMutators(int gridSize);

/// Each condition allele, with probability pMut, moves by +-Geo(p) and is
/// clamped to [0, maxCoord]; the action, with probability pMut, becomes a
/// uniformly chosen different action.
RuleGene mutateRule(const RuleGene& rule, double pMut, std::span<const GeometricMutator, kStateDims> mutators,
                    int maxCoord, Rng& rng);

/// Uniform alleles over [0, maxCoord] and a uniform action.
RuleGene randomRule(int maxCoord, Rng& rng);

/// Rule indices grouped by advocated action for the rules matching a state.
using ActionSets = std::array<std::vector<std::uint32_t>, kNumActions>;

template <class Rule>
    requires requires(const Rule& r) {
        { geneOf(r) } -> std::convertible_to<const RuleGene&>;
    }
ActionSets buildActionSets(std::span<const Rule> rules, const State& s) {
    ActionSets sets;
    for (std::uint32_t i = 0; i < rules.size(); ++i) {
        const RuleGene& g = geneOf(rules[i]);
        if (g.condition.matches(s)) sets[static_cast<std::size_t>(toIndex(g.action))].push_back(i);
    }
    return sets;
}

void to_json(nlohmann::json& j, const Condition& c);
void from_json(const nlohmann::json& j, Condition& c);
void to_json(nlohmann::json& j, const RuleGene& r);
void from_json(const nlohmann::json& j, RuleGene& r);

}  // namespace lcsbench
