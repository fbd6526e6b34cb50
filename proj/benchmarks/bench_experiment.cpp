#include <byzsgd/experiment.hpp>

#include <benchmark/benchmark.h>

using namespace byzsgd;

namespace {

void BM_GarfieldRun(benchmark::State& state) {
    ExperimentConfig c;
    c.cluster.mode = Mode::Garfield;
    c.cluster.n_w = 11;
    c.cluster.f_w = 1;
    c.cluster.n_ps = 4;
    c.cluster.f_ps = 1;
    c.task.dim = static_cast<std::size_t>(state.range(0));
    c.task.samples = 2000;
    c.delays.kind = DelayKind::UniformJitter;
    c.delays.jitter = 0.5;
    c.max_steps = 100;
    c.metrics_every = 100;
    for (auto _ : state)
        benchmark::DoNotOptimize(run_experiment(c));
    state.SetItemsProcessed(state.iterations() * static_cast<long>(c.max_steps));
}

} // namespace

BENCHMARK(BM_GarfieldRun)->Arg(10)->Arg(100)->Unit(benchmark::kMillisecond);
