#include <doctest.h>

#include <cmath>

#include "lcsbench/error.hpp"
#include "lcsbench/frozenlake.hpp"
#include "lcsbench/xcsf.hpp"

using namespace lcsbench;

namespace {

Condition box(int x0, int x1, int y0, int y1) { return Condition{{AllelePair{x0, x1}, AllelePair{y0, y1}}}; }

Classifier make(Condition c, Action a, double fitness = 1.0, Features w = {}) {
    Classifier cl;
    cl.condition = c;
    cl.action = a;
    cl.fitness = fitness;
    cl.weights = w;
    cl.rls = scaledIdentity(10.0);
    return cl;
}

std::string popHash(const Xcs& xcs) { return nlohmann::json(xcs.population()).dump(); }

}  // namespace

TEST_CASE("XCS defaults per grid size") {
    CHECK(XcsConfig::forGrid(4).N == 700);
    CHECK(XcsConfig::forGrid(8).N == 2100);
    CHECK(XcsConfig::forGrid(12).N == 4200);
    CHECK(XcsConfig::forGrid(8).r0 == 4);
    CHECK(XcsConfig::forGrid(8).m0 == 2);
    const XcsConfig d;
    CHECK(d.deltaRls == 10.0);
    CHECK(d.lambdaRls == 0.999);
    CHECK(d.thetaGa == 50);
    CHECK(d.chi == 0.8);
    CHECK(d.muMut == 0.04);
    CHECK(d.tau == 0.5);
    CHECK(d.betaEps == 0.05);
    XcsConfig bad;
    bad.beta = 0.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("one RLS step equals the regularised least-squares solution") {
    Features w{};
    RlsMatrix v = scaledIdentity(10.0);
    const Features x{10.0, 2.0, 3.0};
    rlsUpdate(w, v, x, 1.0, 0.999);
    // Ridge solution x'(lambda/delta I + x x')^-1 x P = |x|^2 / (lambda/delta + |x|^2).
    const double expected = 113.0 / (0.0999 + 113.0);
    CHECK(std::abs(dot(w, x) - expected) < 1e-12);
    CHECK(std::abs(dot(w, x) - 1130.0 / 1130.999) < 1e-12);
}

TEST_CASE("RLS converges to an exact linear target") {
    Features w{};
    RlsMatrix v = scaledIdentity(10.0);
    const Features truth{0.02, -0.1, 0.05};
    Rng rng(3);
    for (int i = 0; i < 200; ++i) {
        const Features x{10.0, static_cast<double>(rng.uniformInt(0, 7)), static_cast<double>(rng.uniformInt(0, 7))};
        rlsUpdate(w, v, x, dot(truth, x), 0.999);
    }
    for (std::size_t k = 0; k < 3; ++k) CHECK(w[k] == doctest::Approx(truth[k]).epsilon(1e-4));
}

TEST_CASE("prediction array and best action") {
    XcsConfig cfg = XcsConfig::forGrid(4);
    std::vector<Classifier> pop{make(box(0, 3, 0, 3), Action::Right, 1.0, {0.05, 0, 0}),
                                make(box(0, 3, 0, 3), Action::Right, 3.0, {0.09, 0, 0}),
                                make(box(0, 1, 0, 1), Action::Down, 1.0, {0.07, 0, 0})};
    const auto xcs = Xcs::fromPopulation(cfg, 4, pop);
    const auto ms = xcs.matchSet({0, 0});
    CHECK(ms.size() == 3);
    const auto pa = xcs.predictionArray(ms, {0, 0});
    CHECK_FALSE(pa[toIndex(Action::Left)].has_value());
    CHECK(*pa[toIndex(Action::Right)] == doctest::Approx((0.5 + 3.0 * 0.9) / 4.0));
    CHECK(*pa[toIndex(Action::Down)] == doctest::Approx(0.7));
    CHECK(bestAction(pa) == Action::Right);
    CHECK(xcs.greedyAction({0, 0}) == Action::Right);
    CHECK(xcs.greedyAction({3, 3}) == Action::Right);

    PredictionArray tie;
    tie[2] = 0.5;
    tie[1] = 0.5;
    CHECK(bestAction(tie) == Action::Down);
    CHECK_FALSE(bestAction(PredictionArray{}).has_value());
}

TEST_CASE("greedy testing on an empty population is null and read-only") {
    const Xcs xcs(XcsConfig::forGrid(4), 4);
    CHECK_FALSE(xcs.greedyAction({0, 0}).has_value());
    CHECK(xcs.population().empty());
}

TEST_CASE("covering fills every missing action") {
    Xcs xcs(XcsConfig::forGrid(4), 4);
    Rng rng(1);
    const auto ms = xcs.matchSetWithCovering({2, 1}, rng);
    CHECK(ms.size() == 4);
    std::array<bool, kNumActions> seen{};
    for (auto i : ms) {
        const auto& cl = xcs.population()[i];
        CHECK(cl.condition.matches({2, 1}));
        CHECK(cl.condition.dims[0].lo() >= 0);
        CHECK(cl.condition.dims[0].hi() <= 3);
        CHECK(cl.fitness == xcs.config().fI);
        CHECK(cl.error == xcs.config().epsI);
        seen[static_cast<std::size_t>(toIndex(cl.action))] = true;
    }
    for (bool s : seen) CHECK(s);
    CHECK(xcs.matchSetWithCovering({2, 1}, rng).size() >= 4);
}

TEST_CASE("insert merges identical phenotypes") {
    Xcs xcs(XcsConfig::forGrid(4), 4);
    xcs.insert(make(box(0, 2, 1, 1), Action::Up));
    xcs.insert(make(box(2, 0, 1, 1), Action::Up));
    xcs.insert(make(box(0, 2, 1, 1), Action::Down));
    CHECK(xcs.population().size() == 2);
    CHECK(xcs.population()[0].numerosity == 2);
    CHECK(xcs.numerositySum() == 3);
}

TEST_CASE("compact drops dead classifiers and reports the remap") {
    std::vector<Classifier> pop{make(box(0, 0, 0, 0), Action::Up), make(box(1, 1, 1, 1), Action::Up),
                                make(box(2, 2, 2, 2), Action::Up)};
    pop[1].numerosity = 0;
    auto xcs = Xcs::fromPopulation(XcsConfig::forGrid(4), 4, pop);
    const auto remap = xcs.compact();
    CHECK(remap == std::vector<std::uint32_t>{0, Xcs::kRemoved, 1});
    CHECK(xcs.population().size() == 2);
    CHECK(xcs.population()[1].condition == box(2, 2, 2, 2));
}

TEST_CASE("updateSet moves prediction towards the payoff and rewards accuracy") {
    XcsConfig cfg = XcsConfig::forGrid(4);
    auto xcs = Xcs::fromPopulation(cfg, 4, {make(box(0, 3, 0, 3), Action::Right, 0.01)});
    const std::vector<std::uint32_t> set{0};
    for (int i = 0; i < 50; ++i) xcs.updateSet(set, {1, 2}, 0.5);
    const auto& cl = xcs.population()[0];
    CHECK(cl.prediction(augment({1, 2}, cfg.x0)) == doctest::Approx(0.5).epsilon(1e-3));
    CHECK(cl.experience == 50);
    CHECK(cl.error < cfg.eps0);
    CHECK(cl.fitness > 0.9);
}

TEST_CASE("noise tracking absorbs irreducible payoff noise") {
    XcsConfig cfg = XcsConfig::forGrid(4);
    cfg.noiseTracking = true;
    auto tracked = Xcs::fromPopulation(cfg, 4, {make(box(0, 3, 0, 3), Action::Right, 0.01)});
    cfg.noiseTracking = false;
    auto plain = Xcs::fromPopulation(cfg, 4, {make(box(0, 3, 0, 3), Action::Right, 0.01)});
    const std::vector<std::uint32_t> set{0};
    Rng rng(5);
    for (int i = 0; i < 3000; ++i) {
        const double payoff = rng.bernoulli(0.5) ? 1.0 : 0.0;
        tracked.updateSet(set, {1, 1}, payoff);
        plain.updateSet(set, {1, 1}, payoff);
    }
    CHECK(tracked.population()[0].noise > 0.3);
    CHECK(tracked.population()[0].error < plain.population()[0].error);
}

TEST_CASE("training respects the population bound and counts GA events") {
    FrozenLake env(GridMap::defaultMap(4), 0.0);
    Xcs xcs(XcsConfig::forGrid(4), 4);
    XcsTrainer trainer(xcs, env);
    Rng rng(8);
    std::uint64_t events = 0;
    for (int i = 0; i < 20000; ++i) {
        events += trainer.step(rng);
        REQUIRE(xcs.numerositySum() <= xcs.config().N);
    }
    CHECK(events == xcs.gaInvocationCount());
    CHECK(events > 0);
    CHECK(trainer.steps() == 20000);
    CHECK(trainer.episodes() > 100);
    for (const auto& cl : xcs.population()) CHECK(cl.numerosity > 0);
}

TEST_CASE("greedy testing does not mutate the population") {
    FrozenLake env(GridMap::defaultMap(4), 0.3);
    Xcs xcs(XcsConfig::forGrid(4), 4);
    XcsTrainer trainer(xcs, env);
    Rng rng(9);
    for (int i = 0; i < 5000; ++i) trainer.step(rng);
    const auto before = popHash(xcs);
    const auto policy = xcs.greedyPolicy();
    for (const State& s : env.initialStates()) (void)rollout(env, policy, s, rng);
    CHECK(popHash(xcs) == before);
}

TEST_CASE("classifier json round trip") {
    Classifier cl = make(box(1, 3, 0, 2), Action::Down, 0.25, {0.1, 0.2, 0.3});
    cl.numerosity = 3;
    cl.experience = 17;
    cl.error = 0.004;
    const nlohmann::json j = cl;
    const auto back = j.get<Classifier>();
    CHECK(back.condition == cl.condition);
    CHECK(back.action == cl.action);
    CHECK(back.weights == cl.weights);
    CHECK(back.numerosity == 3);
    CHECK(back.experience == 17);
    CHECK(back.fitness == 0.25);
    auto broken = j;
    broken["numerosity"] = 0;
    CHECK_THROWS(broken.get<Classifier>());
}
