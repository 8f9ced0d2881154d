#include <benchmark/benchmark.h>

#include "ctlcap/capacity.hpp"
#include "ctlcap/carryfree.hpp"
#include "ctlcap/simulate.hpp"

using namespace ctlcap;

namespace {

SimulationParams sim_params()
{
    SimulationParams p;
    p.horizon = 200;
    p.paths = 4000;
    p.etas = {2.0};
    p.thresholds = {1e6};
    return p;
}

void BM_simulate(benchmark::State& state)
{
    SystemSpec const spec{6.0, ActuationDistribution::uniform(1, 3)};
    auto const p = sim_params();
    for (auto _ : state) {
        benchmark::DoNotOptimize(simulate(spec, StrategySpec::linear(-0.42), p));
    }
    state.SetItemsProcessed(state.iterations() * p.horizon * static_cast<std::int64_t>(p.paths));
}

void BM_simulate_reference(benchmark::State& state)
{
    SystemSpec const spec{6.0, ActuationDistribution::uniform(1, 3)};
    auto const p = sim_params();
    for (auto _ : state) {
        benchmark::DoNotOptimize(reference::simulate(spec, StrategySpec::linear(-0.42), p));
    }
    state.SetItemsProcessed(state.iterations() * p.horizon * static_cast<std::int64_t>(p.paths));
}

void BM_capacity_curve(benchmark::State& state)
{
    auto const g = ActuationDistribution::gaussian(4, 1);
    std::vector<double> etas;
    for (int i = 0; i < 20; ++i) {
        etas.push_back(0.01 * std::pow(6400.0, i / 19.0));
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(capacity_curve(g, etas));
    }
}

void BM_carryfree_degrees(benchmark::State& state)
{
    DegreeParams p;
    p.horizon = 200;
    p.paths = 200;
    CarryFreeGain const gain(3, 1);
    for (auto _ : state) {
        benchmark::DoNotOptimize(simulate_degrees(gain, 2, p));
    }
}

void BM_carryfree_degrees_reference(benchmark::State& state)
{
    DegreeParams p;
    p.horizon = 200;
    p.paths = 200;
    CarryFreeGain const gain(3, 1);
    for (auto _ : state) {
        benchmark::DoNotOptimize(reference::simulate_degrees(gain, 2, p));
    }
}

}  // namespace

BENCHMARK(BM_simulate)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_simulate_reference)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_capacity_curve)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_carryfree_degrees)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_carryfree_degrees_reference)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
