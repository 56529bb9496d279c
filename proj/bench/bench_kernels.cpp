// Parallel vs serial reference for the two dense assembly kernels.

#include "needlet/kernel.hpp"
#include "needlet/simulation.hpp"

#include <benchmark/benchmark.h>

namespace {

using namespace needlet;

std::vector<SpherePoint> points(int m) { return sample_design(SamplingDesign::uniform(), m, 42); }

void BM_gram(benchmark::State& state) {
    const NeedletKernel K(static_cast<int>(state.range(1)), 2);
    const auto pts = points(static_cast<int>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(gram(K, pts));
}

void BM_gram_serial(benchmark::State& state) {
    const NeedletKernel K(static_cast<int>(state.range(1)), 2);
    const auto pts = points(static_cast<int>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(gram_serial(K, pts));
}

void BM_harmonics(benchmark::State& state) {
    const auto pts = points(static_cast<int>(state.range(0)));
    const int kmax = static_cast<int>(state.range(1));
    for (auto _ : state) benchmark::DoNotOptimize(harmonic_matrix(kmax, pts));
}

void BM_harmonics_serial(benchmark::State& state) {
    const auto pts = points(static_cast<int>(state.range(0)));
    const int kmax = static_cast<int>(state.range(1));
    for (auto _ : state) benchmark::DoNotOptimize(harmonic_matrix_serial(kmax, pts));
}

}  // namespace

BENCHMARK(BM_gram)->Args({1024, 4})->Args({2048, 8})->Args({4096, 8})->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_gram_serial)->Args({1024, 4})->Args({2048, 8})->Args({4096, 8})->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_harmonics)->Args({4096, 15})->Args({16384, 63})->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_harmonics_serial)->Args({4096, 15})->Args({16384, 63})->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
