#include <benchmark/benchmark.h>

#include "bench_common.hpp"
#include "mmsplat/render.hpp"

using namespace mmsplat;

namespace {

void BM_render_modality(benchmark::State& state) {
    const Scene scene = bench::make_scene(static_cast<int>(state.range(0)), 128, 128);
    RenderOptions opts = RenderOptions::fast();
    opts.workers = static_cast<int>(state.range(1));
    for (auto _ : state) {
        const auto rr = render_modality(scene, 0, opts);
        benchmark::DoNotOptimize(rr.image.data.data());
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_render_all(benchmark::State& state) {
    const Scene scene = bench::make_scene(static_cast<int>(state.range(0)), 128, 128);
    RenderOptions opts = RenderOptions::fast();
    for (auto _ : state) {
        const auto all = render_all(scene, opts);
        benchmark::DoNotOptimize(all.front().image.data.data());
    }
}

void BM_sort_for_compositing(benchmark::State& state) {
    const Scene scene = bench::make_scene(static_cast<int>(state.range(0)), 64, 64);
    for (auto _ : state) {
        auto order = sort_for_compositing(scene);
        benchmark::DoNotOptimize(order.data());
    }
}

}  // namespace

BENCHMARK(BM_render_modality)->Args({500, 1})->Args({2000, 1})->Args({2000, 2})
    ->Unit(benchmark::kMillisecond);
BENCHMARK(BM_render_all)->Arg(1000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_sort_for_compositing)->Arg(10000)->Unit(benchmark::kMicrosecond);
