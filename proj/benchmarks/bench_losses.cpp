#include <benchmark/benchmark.h>

#include <random>

#include "mmsplat/losses.hpp"

using namespace mmsplat;

namespace {

ModalityImage noisy(int w, int h, int c, unsigned seed) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    ModalityImage img(0, w, h, c);
    for (auto& v : img.data) v = unit(rng);
    return img;
}

void BM_loss_rgb_like(benchmark::State& state) {
    const int side = static_cast<int>(state.range(0));
    const auto render = noisy(side, side, 3, 1);
    const auto truth = noisy(side, side, 3, 2);
    for (auto _ : state) {
        const LossResult r = loss_rgb_like(render, truth);
        benchmark::DoNotOptimize(r.value);
    }
}

void BM_loss_thermal(benchmark::State& state) {
    const int side = static_cast<int>(state.range(0));
    const auto render = noisy(side, side, 1, 3);
    const auto truth = noisy(side, side, 1, 4);
    for (auto _ : state) {
        const LossResult r = loss_thermal(render, truth, 0.6);
        benchmark::DoNotOptimize(r.value);
    }
}

}  // namespace

BENCHMARK(BM_loss_rgb_like)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_loss_thermal)->Arg(128)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
