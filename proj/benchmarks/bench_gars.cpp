#include <byzsgd/gars.hpp>

#include <benchmark/benchmark.h>

#include <array>
#include <random>
#include <vector>

using namespace byzsgd;

namespace {

std::vector<ParamVector> inputs(std::size_t q, std::size_t d) {
    std::mt19937_64 gen(q * 7919 + d);
    std::normal_distribution<double> nd;
    std::vector<ParamVector> out(q, ParamVector(d));
    for (auto& v : out)
        for (auto& x : v)
            x = nd(gen);
    return out;
}

void BM_Average(benchmark::State& state) {
    const auto in = inputs(state.range(0), state.range(1));
    for (auto _ : state)
        benchmark::DoNotOptimize(average(in));
}

void BM_Median(benchmark::State& state) {
    const auto in = inputs(state.range(0), state.range(1));
    const std::size_t f = (in.size() - 1) / 2;
    for (auto _ : state)
        benchmark::DoNotOptimize(median(in, f));
}

void BM_MultiKrum(benchmark::State& state) {
    const auto in = inputs(state.range(0), state.range(1));
    const std::size_t f = (in.size() - 3) / 2;
    for (auto _ : state)
        benchmark::DoNotOptimize(multi_krum(in, f, in.size() - f - 2));
}

void BM_Mda(benchmark::State& state) {
    const auto in = inputs(state.range(0), state.range(1));
    const std::size_t f = (in.size() - 1) / 2;
    for (auto _ : state)
        benchmark::DoNotOptimize(mda(in, f));
}

void BM_Bulyan(benchmark::State& state) {
    const auto in = inputs(state.range(0), state.range(1));
    const std::size_t f = (in.size() - 3) / 4;
    for (auto _ : state)
        benchmark::DoNotOptimize(bulyan(in, f));
}

void BM_Median3Reorder(benchmark::State& state) {
    std::mt19937_64 gen(3);
    std::uniform_real_distribution<double> ud;
    std::vector<std::array<double, 3>> triples(1024);
    for (auto& t : triples)
        t = {ud(gen), ud(gen), ud(gen)};
    std::size_t i = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(median3_reorder(triples[i]));
        i = (i + 1) & 1023;
    }
}

} // namespace

BENCHMARK(BM_Average)->ArgsProduct({{7, 15, 31}, {1000, 100000}});
BENCHMARK(BM_Median)->ArgsProduct({{7, 15, 31}, {1000, 100000}});
BENCHMARK(BM_MultiKrum)->ArgsProduct({{7, 15, 31}, {1000, 100000}});
BENCHMARK(BM_Mda)->ArgsProduct({{7, 11, 15}, {1000}});
BENCHMARK(BM_Bulyan)->ArgsProduct({{7, 15, 31}, {1000, 100000}});
BENCHMARK(BM_Median3Reorder);
BENCHMARK_MAIN();
