// Serial reference vs OpenMP kernels. Arg = thread count for the OpenMP
// variants; on a single-core machine the two are expected to tie.

#include <benchmark/benchmark.h>

#include <vector>

#include "besi/experiment.hpp"
#include "besi/forward.hpp"
#include "besi/kernels.hpp"
#include "besi/rng.hpp"

namespace {

struct Fixture {
    besi::SphereHeadModel model;
    besi::DualGrids grids;

    Fixture() {
        auto c = besi::ExperimentConfig::desk_scale();
        model = c.head_model();
        grids = besi::make_dual_grids(model, c.simulation_config(), 1, 3);
    }
};

const Fixture& fixture() {
    static const Fixture f;
    return f;
}

besi::Matrix random_points(besi::Index n, std::uint64_t seed) {
    besi::Rng rng(seed);
    besi::Matrix p(n, 3);
    for (besi::Index i = 0; i < p.size(); ++i) p.data()[i] = rng.uniform(-70, 70);
    return p;
}

void BM_LeadFieldSerial(benchmark::State& state) {
    const auto& f = fixture();
    for (auto _ : state) {
        benchmark::DoNotOptimize(besi::kernels::sphere_leadfield_serial(f.model, f.grids.reconstruction));
    }
}

void BM_LeadFieldOmp(benchmark::State& state) {
    const auto& f = fixture();
    besi::kernels::set_thread_count(static_cast<int>(state.range(0)));
    for (auto _ : state) {
        benchmark::DoNotOptimize(besi::kernels::sphere_leadfield_omp(f.model, f.grids.reconstruction));
    }
}

void BM_NearestSerial(benchmark::State& state) {
    const auto from = random_points(state.range(0), 1), to = random_points(state.range(0), 2);
    std::vector<besi::Index> idx;
    std::vector<double> dist;
    for (auto _ : state) {
        besi::kernels::nearest_neighbours_serial(from, to, idx, dist);
        benchmark::DoNotOptimize(idx.data());
    }
}

void BM_NearestOmp(benchmark::State& state) {
    const auto from = random_points(state.range(0), 1), to = random_points(state.range(0), 2);
    besi::kernels::set_thread_count(static_cast<int>(state.range(1)));
    std::vector<besi::Index> idx;
    std::vector<double> dist;
    for (auto _ : state) {
        besi::kernels::nearest_neighbours_omp(from, to, idx, dist);
        benchmark::DoNotOptimize(idx.data());
    }
}

}  // namespace

BENCHMARK(BM_LeadFieldSerial)->UseRealTime()->Unit(benchmark::kMillisecond);
BENCHMARK(BM_LeadFieldOmp)->Arg(1)->Arg(2)->Arg(4)->UseRealTime()->Unit(benchmark::kMillisecond);
BENCHMARK(BM_NearestSerial)->Arg(1000)->Arg(10000)->UseRealTime()->Unit(benchmark::kMillisecond);
BENCHMARK(BM_NearestOmp)->Args({1000, 1})->Args({1000, 4})->Args({10000, 1})->Args({10000, 4})
    ->UseRealTime()->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
