#pragma once

#include <cstdint>
#include <vector>

#include "mmsplat/image.hpp"
#include "mmsplat/scene.hpp"

namespace mmsplat {

struct RenderOptions {
    // Minimum g(x) below which a gaussian is skipped at a pixel. 0 disables
    // skipping (oracle mode); 1/255 matches common splatting practice.
    double cutoff = 1.0 / 255.0;
    // Stop compositing a pixel once transmittance falls below this. Only
    // active when early_stop is set; oracle mode runs with it off.
    bool early_stop = false;
    double early_stop_transmittance = 1e-4;
    // Per-channel background value composited as T_final * background.
    double background = 0.0;
    int tile_size = 16;
    // 0 = resolve from MMSPLAT_WORKERS env var (fallback: hardware threads).
    int workers = 0;

    static RenderOptions oracle() {
        RenderOptions o;
        o.cutoff = 0.0;
        o.early_stop = false;
        return o;
    }
    static RenderOptions fast() {
        RenderOptions o;
        o.early_stop = true;
        return o;
    }
};

// Which gaussians touched each pixel during a forward render, front-to-back,
// with their composite weights w = T * alpha * g(x). Retained for backward.
// Entries are stored tile-major; starts/counts give each pixel its segment.
struct CompositeTrace {
    struct Entry {
        std::uint32_t gaussian;
        double weight;
    };
    int modality_id = -1;
    int width = 0;
    int height = 0;
    std::size_t gaussian_count = 0;  // scene size at render time, for mismatch checks
    std::vector<std::uint32_t> starts;  // size H*W, pixel-major
    std::vector<std::uint32_t> counts;  // size H*W, pixel-major
    std::vector<Entry> entries;

    std::size_t begin(std::size_t pixel) const { return starts[pixel]; }
    std::size_t end(std::size_t pixel) const { return starts[pixel] + counts[pixel]; }
};

struct RenderResult {
    ModalityImage image;
    CompositeTrace trace;
};

// Indices ordered by ascending depth, ties by ascending index.
std::vector<std::uint32_t> sort_for_compositing(const Scene& scene);

// Front-to-back alpha compositing of one modality per the scene mode. In
// indicator mode, gaussians with the slot switched off are skipped entirely.
RenderResult render_modality(const Scene& scene, int modality_id,
                             const RenderOptions& opts = RenderOptions::fast());

std::vector<RenderResult> render_all(const Scene& scene,
                                     const RenderOptions& opts = RenderOptions::fast());

}  // namespace mmsplat
