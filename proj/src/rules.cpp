#include "lcsbench/rules.hpp"

#include <cmath>
#include <stdexcept>

namespace lcsbench {

bool Condition::samePhenotype(const Condition& o) const noexcept {
    for (int d = 0; d < kStateDims; ++d)
        if (dims[d].lo() != o.dims[d].lo() || dims[d].hi() != o.dims[d].hi()) return false;
    return true;
}

bool Condition::contains(const Condition& o) const noexcept {
    for (int d = 0; d < kStateDims; ++d)
        if (dims[d].lo() > o.dims[d].lo() || dims[d].hi() < o.dims[d].hi()) return false;
    return true;
}

double geometricParam(int width) {
    if (width < 2) throw std::invalid_argument("geometric mutation needs a dimension width >= 2");
    const int k = width / 2;
    // P(X <= k) = 1 - (1 - p)^k >= 0.99
    return 1.0 - std::pow(0.01, 1.0 / k);
}

GeometricMutator::GeometricMutator(int width) : width_(width), p_(geometricParam(width)) {}

std::array<GeometricMutator, kStateDims> gridMutators(int gridSize) {
    return {GeometricMutator(gridSize), GeometricMutator(gridSize)};
}

namespace {

int mutateAllele(int allele, const GeometricMutator& mut, int maxCoord, Rng& rng) {
    const int magnitude = mut.sampleMagnitude(rng);
    const int sign = rng.bernoulli(0.5) ? 1 : -1;
    return std::clamp(allele + sign * magnitude, 0, maxCoord);
}

}  // namespace

RuleGene mutateRule(const RuleGene& rule, double pMut, std::span<const GeometricMutator, kStateDims> mutators,
                    int maxCoord, Rng& rng) {
    RuleGene out = rule;
    for (int d = 0; d < kStateDims; ++d) {
        auto& pair = out.condition.dims[d];
        if (rng.bernoulli(pMut)) pair.p = mutateAllele(pair.p, mutators[d], maxCoord, rng);
        if (rng.bernoulli(pMut)) pair.q = mutateAllele(pair.q, mutators[d], maxCoord, rng);
    }
    if (rng.bernoulli(pMut)) {
        // Uniform over A - {a}: draw from the remaining three and skip past a.
        int next = rng.uniformInt(0, kNumActions - 2);
        if (next >= toIndex(rule.action)) ++next;
        out.action = actionFromIndex(next);
    }
    return out;
}

RuleGene randomRule(int maxCoord, Rng& rng) {
    RuleGene r;
    for (auto& pair : r.condition.dims) {
        pair.p = rng.uniformInt(0, maxCoord);
        pair.q = rng.uniformInt(0, maxCoord);
    }
    r.action = actionFromIndex(rng.uniformInt(0, kNumActions - 1));
    return r;
}

void to_json(nlohmann::json& j, const Condition& c) {
    j = nlohmann::json::array();
    for (const auto& pair : c.dims) j.push_back({pair.p, pair.q});
}

void from_json(const nlohmann::json& j, Condition& c) {
    if (!j.is_array() || j.size() != kStateDims) throw std::invalid_argument("condition must list one [p, q] pair per dimension");
    for (int d = 0; d < kStateDims; ++d) {
        const auto& pair = j.at(static_cast<std::size_t>(d));
        if (!pair.is_array() || pair.size() != 2) throw std::invalid_argument("condition pair must have two alleles");
        c.dims[d] = {pair.at(0).get<int>(), pair.at(1).get<int>()};
    }
}

void to_json(nlohmann::json& j, const RuleGene& r) {
    j = nlohmann::json{{"condition", r.condition}, {"action", toIndex(r.action)}};
}

void from_json(const nlohmann::json& j, RuleGene& r) {
    j.at("condition").get_to(r.condition);
    const int a = j.at("action").get<int>();
    if (a < 0 || a >= kNumActions) throw std::invalid_argument("action out of range");
    r.action = actionFromIndex(a);
}

}  // namespace lcsbench
