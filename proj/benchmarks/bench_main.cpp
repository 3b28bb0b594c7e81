#include <benchmark/benchmark.h>

#include "tminimax/allocation.hpp"
#include "tminimax/estimators.hpp"
#include "tminimax/risk.hpp"
#include "tminimax/simulate.hpp"

using namespace tminimax;

static void BM_RelaxedBasic(benchmark::State& state) {
    const int T = static_cast<int>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(relaxed_basic(10000, T));
}
BENCHMARK(BM_RelaxedBasic)->Arg(10)->Arg(50);

static void BM_RelaxedRecycling(benchmark::State& state) {
    const int T = static_cast<int>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(relaxed_recycling(10000, T, 2));
}
BENCHMARK(BM_RelaxedRecycling)->Arg(10)->Arg(30);

static void BM_IntegerSolve(benchmark::State& state) {
    const auto N = state.range(0);
    const int T = static_cast<int>(state.range(1));
    for (auto _ : state) benchmark::DoNotOptimize(integer_solve(N, T, ObjectiveMode::augmented()));
}
BENCHMARK(BM_IntegerSolve)->Args({100, 5})->Args({1000, 30})->Args({10000, 50})->Unit(benchmark::kMillisecond);

static void BM_EstimateAll(benchmark::State& state) {
    const auto N = static_cast<std::size_t>(state.range(0));
    constexpr int T = 20;
    const auto s = standard_model(ModelParams{}, N, T, 1);
    const AssignmentMatrix Z = draw_assignment(balanced(static_cast<std::int64_t>(N), T), ArmFamily::Pulse, 2);
    const ObservedOutcomes obs = observe(Z, s);
    for (auto _ : state) benchmark::DoNotOptimize(estimate_all(Z, obs, InstantaneousEstimator::Augmented, 1));
}
BENCHMARK(BM_EstimateAll)->Arg(500)->Arg(5000);

static void BM_McRisk(benchmark::State& state) {
    const Allocation a = integer_solve(200, 5, ObjectiveMode::basic());
    const WorstCase w = worst_case_schedule(200, 5, 0.0, 1.0);
    for (auto _ : state) benchmark::DoNotOptimize(mc_risk(a, w.schedule, LossSpec::plugin(), state.range(0), 1));
}
BENCHMARK(BM_McRisk)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
