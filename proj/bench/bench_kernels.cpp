#include <benchmark/benchmark.h>

#include "lcsbench/oracle.hpp"
#include "lcsbench/ppl.hpp"

using namespace lcsbench;

namespace {

Execution execOf(const benchmark::State& state) { return state.range(1) ? Execution::Parallel : Execution::Serial; }

void labelOf(benchmark::State& state) { state.SetLabel(state.range(1) ? "parallel" : "serial"); }

template <class Rule>
void BM_EvaluatePopulation(benchmark::State& state) {
    const int m = static_cast<int>(state.range(0));
    FrozenLake env(GridMap::defaultMap(m), 0.3);
    const GaConfig cfg = GaConfig::forGrid(m);
    const auto z = buildTestSequence(env, 10);
    Rng rng(1);
    auto pop = initialPopulation<Rule>(cfg, RuleSpace{m}, rng);
    for (auto _ : state) {
        Rng evalRng(2);
        benchmark::DoNotOptimize(evaluatePopulation(pop, env, cfg, z, evalRng, execOf(state)));
    }
    labelOf(state);
}

void BM_ValueIteration(benchmark::State& state) {
    FrozenLake env(GridMap::defaultMap(static_cast<int>(state.range(0))), 0.3);
    for (auto _ : state) benchmark::DoNotOptimize(valueIteration(env, 1e-10, execOf(state)));
    labelOf(state);
}

}  // namespace

BENCHMARK(BM_EvaluatePopulation<RuleGene>)->ArgsProduct({{4, 8}, {0, 1}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_EvaluatePopulation<StRule>)->ArgsProduct({{4, 8}, {0, 1}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ValueIteration)->ArgsProduct({{4, 8, 12}, {0, 1}})->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
