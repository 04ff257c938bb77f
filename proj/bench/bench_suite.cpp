// Property-suite throughput: serial reference loop vs OpenMP-parallel loop.

#include <benchmark/benchmark.h>

#include "tsallis/properties.hpp"

namespace {

void run(benchmark::State& state, tsallis::ExecutionPolicy policy) {
    tsallis::SuiteConfig cfg;
    cfg.instances = static_cast<std::size_t>(state.range(0));
    cfg.policy = policy;
    for (auto _ : state) {
        auto reports = tsallis::run_suite(cfg);
        benchmark::DoNotOptimize(reports);
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_SuiteSerial(benchmark::State& state) { run(state, tsallis::ExecutionPolicy::serial); }
void BM_SuiteParallel(benchmark::State& state) { run(state, tsallis::ExecutionPolicy::parallel); }

}  // namespace

BENCHMARK(BM_SuiteSerial)->Arg(10)->Arg(50)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SuiteParallel)->Arg(10)->Arg(50)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
