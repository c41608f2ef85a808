#pragma once

#include <random>

#include "mmsplat/scene.hpp"

namespace bench {

// Dense random scene sized for throughput measurement.
inline mmsplat::Scene make_scene(int gaussians, int width, int height) {
    std::mt19937 rng(12345);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    mmsplat::Scene scene;
    scene.viewport.width = width;
    scene.viewport.height = height;
    scene.modalities = {{0, "rgb", 3, mmsplat::LossKind::L1Dssim, 0.5, 0.0},
                        {1, "thermal", 1, mmsplat::LossKind::L1DssimSmooth, 0.5, 0.6},
                        {2, "language", 3, mmsplat::LossKind::FeatureL1, 0.2, 0.0}};
    for (int i = 0; i < gaussians; ++i) {
        mmsplat::ModalGaussian g = mmsplat::make_gaussian(scene.modalities);
        g.mean = {unit(rng) * width, unit(rng) * height};
        g.log_scales = {std::log(1.0 + 3.0 * unit(rng)), std::log(1.0 + 3.0 * unit(rng))};
        g.rotation = unit(rng) * 3.1415926;
        g.depth = unit(rng);
        g.shared_opacity_logit = unit(rng) * 4.0 - 2.0;
        for (auto& slot : g.slots) {
            slot.indicator_logit = unit(rng) * 4.0 - 2.0;
            for (auto& f : slot.features) f = unit(rng);
        }
        scene.gaussians.push_back(std::move(g));
    }
    return scene;
}

}  // namespace bench
