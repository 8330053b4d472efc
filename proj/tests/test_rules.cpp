#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "lcsbench/rules.hpp"

using namespace lcsbench;

namespace {

Condition box(int x0, int x1, int y0, int y1) { return Condition{{AllelePair{x0, x1}, AllelePair{y0, y1}}}; }

}  // namespace

TEST_CASE("allele pairs are unordered") {
    const AllelePair a{3, 1};
    CHECK(a.lo() == 1);
    CHECK(a.hi() == 3);
    CHECK(a.contains(2));
    CHECK(a.contains(1));
    CHECK(a.contains(3));
    CHECK_FALSE(a.contains(0));
    CHECK_FALSE(a.contains(4));
}

TEST_CASE("condition matching and phenotype") {
    const auto c = box(2, 0, 1, 1);
    CHECK(c.matches({0, 1}));
    CHECK(c.matches({2, 1}));
    CHECK_FALSE(c.matches({2, 2}));
    CHECK_FALSE(c.matches({3, 1}));

    CHECK(c.samePhenotype(box(0, 2, 1, 1)));
    CHECK_FALSE(c == box(0, 2, 1, 1));
    CHECK_FALSE(c.samePhenotype(box(0, 3, 1, 1)));

    CHECK(box(0, 3, 0, 3).contains(c));
    CHECK_FALSE(c.contains(box(0, 3, 0, 3)));
    CHECK(c.contains(c));
}

TEST_CASE("geometric parameter closed form") {
    CHECK(geometricParam(4) == doctest::Approx(0.9).epsilon(1e-12));
    CHECK(std::abs(geometricParam(8) - (1.0 - std::pow(0.01, 0.25))) < 1e-12);
    CHECK(std::abs(geometricParam(12) - (1.0 - std::pow(0.01, 1.0 / 6.0))) < 1e-12);
    CHECK(geometricParam(8) == doctest::Approx(0.683772).epsilon(1e-6));
    CHECK(geometricParam(12) == doctest::Approx(0.535841).epsilon(1e-6));
    CHECK_THROWS_AS(geometricParam(1), std::invalid_argument);
}

TEST_CASE("geometric magnitudes start at one") {
    GeometricMutator mut(8);
    Rng rng(3);
    int inRange = 0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
        const int m = mut.sampleMagnitude(rng);
        REQUIRE(m >= 1);
        if (m <= 4) ++inRange;
    }
    CHECK(static_cast<double>(inRange) / n > 0.985);
}

TEST_CASE("mutation with pMut = 0 is the identity") {
    Rng rng(9);
    const auto muts = gridMutators(4);
    for (int i = 0; i < 200; ++i) {
        const auto r = randomRule(3, rng);
        CHECK(mutateRule(r, 0.0, muts, 3, rng) == r);
    }
}

TEST_CASE("mutation with pMut = 1 changes the action and stays in bounds") {
    Rng rng(10);
    const auto muts = gridMutators(8);
    std::array<int, kNumActions> seen{};
    for (int i = 0; i < 2000; ++i) {
        const auto r = randomRule(7, rng);
        const auto m = mutateRule(r, 1.0, muts, 7, rng);
        CHECK(m.action != r.action);
        ++seen[static_cast<std::size_t>(toIndex(m.action))];
        for (const auto& pair : m.condition.dims) {
            CHECK(pair.p >= 0);
            CHECK(pair.p <= 7);
            CHECK(pair.q >= 0);
            CHECK(pair.q <= 7);
        }
    }
    for (int c : seen) CHECK(c > 300);
}

TEST_CASE("random rules cover the allele range") {
    Rng rng(12);
    std::array<int, 4> hits{};
    for (int i = 0; i < 1000; ++i) {
        const auto r = randomRule(3, rng);
        for (const auto& pair : r.condition.dims) {
            REQUIRE(pair.p >= 0);
            REQUIRE(pair.p <= 3);
            ++hits[static_cast<std::size_t>(pair.p)];
        }
    }
    for (int h : hits) CHECK(h > 300);
}

TEST_CASE("action sets group matching rules by action") {
    const std::vector<RuleGene> rules{
        {box(0, 3, 0, 3), Action::Right},
        {box(0, 0, 0, 0), Action::Down},
        {box(1, 3, 0, 3), Action::Right},
        {box(0, 1, 0, 1), Action::Up},
    };
    const auto sets = buildActionSets(std::span<const RuleGene>(rules), {0, 0});
    CHECK(sets[toIndex(Action::Right)] == std::vector<std::uint32_t>{0});
    CHECK(sets[toIndex(Action::Down)] == std::vector<std::uint32_t>{1});
    CHECK(sets[toIndex(Action::Up)] == std::vector<std::uint32_t>{3});
    CHECK(sets[toIndex(Action::Left)].empty());
    const auto other = buildActionSets(std::span<const RuleGene>(rules), {2, 2});
    CHECK(other[toIndex(Action::Right)] == std::vector<std::uint32_t>{0, 2});
}

TEST_CASE("json round trip") {
    const RuleGene r{box(3, 1, 0, 2), Action::Up};
    const nlohmann::json j = r;
    CHECK(j["condition"] == nlohmann::json::parse("[[3,1],[0,2]]"));
    CHECK(j["action"] == 3);
    CHECK(j.get<RuleGene>() == r);
    CHECK_THROWS(nlohmann::json::parse(R"({"condition":[[1,2]],"action":0})").get<RuleGene>());
}
