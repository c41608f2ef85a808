#include <benchmark/benchmark.h>

#include "bench_common.hpp"
#include "mmsplat/backward.hpp"
#include "mmsplat/render.hpp"

using namespace mmsplat;

namespace {

void BM_backward_modality(benchmark::State& state) {
    const Scene scene = bench::make_scene(static_cast<int>(state.range(0)), 128, 128);
    const auto rr = render_modality(scene, 0, RenderOptions::fast());
    ModalityImage d_image(0, 128, 128, 3);
    for (std::size_t i = 0; i < d_image.data.size(); ++i)
        d_image.data[i] = static_cast<double>(i % 7) / 7.0 - 0.5;
    const int workers = static_cast<int>(state.range(1));
    for (auto _ : state) {
        const GradientSet grads = backward_modality(scene, 0, rr.trace, d_image, workers);
        benchmark::DoNotOptimize(grads.d_mean_x.data());
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK(BM_backward_modality)->Args({500, 1})->Args({2000, 1})->Args({2000, 2})
    ->Unit(benchmark::kMillisecond);
