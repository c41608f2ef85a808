#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "mmsplat/render.hpp"
#include "mmsplat/scene.hpp"

// Shared between the forward rasterizer and the backward pass so both
// evaluate identical expressions on identical values.
namespace mmsplat::detail {

struct PreparedGaussian {
    std::uint32_t scene_index;
    Vec2 mean;
    double ct, st;            // cos/sin of rotation
    double sx, sy;            // activated scales
    double inv_sx, inv_sy;
    double alpha;             // activated indicator or shared opacity
    const double* features;   // d_m values, borrowed from the scene
    double pixel_radius;      // conservative screen-space extent for culling
    // Squared world-space distance beyond which q > 2 ln(1/cutoff) is
    // guaranteed, so the g < cutoff skip fires without evaluating exp().
    // Slightly padded so the quick reject can never disagree with the
    // exact test. Infinite when cutoff is 0.
    double reject_dist_sq;
};

struct GaussianSample {
    double gx, gy;  // offset in the gaussian frame (d' components)
    double g;       // exp(-q/2)
};

inline GaussianSample eval_prepared(const PreparedGaussian& p, const Vec2& x_world) {
    const double dx = x_world.x - p.mean.x;
    const double dy = x_world.y - p.mean.y;
    const double gx = p.ct * dx + p.st * dy;
    const double gy = -p.st * dx + p.ct * dy;
    const double ux = gx * p.inv_sx;
    const double uy = gy * p.inv_sy;
    return {gx, gy, std::exp(-0.5 * (ux * ux + uy * uy))};
}

// Active gaussians for one modality in compositing order. `order` must come
// from sort_for_compositing. Throws on scale underflow.
std::vector<PreparedGaussian> prepare_gaussians(const Scene& scene, int modality_id,
                                                const std::vector<std::uint32_t>& order,
                                                double cutoff);

struct TileGrid {
    int tile_size;
    int tiles_x;
    int tiles_y;

    TileGrid(int width, int height, int tile_size_)
        : tile_size(tile_size_),
          tiles_x((width + tile_size_ - 1) / tile_size_),
          tiles_y((height + tile_size_ - 1) / tile_size_) {}

    int count() const { return tiles_x * tiles_y; }
};

// Per-tile candidate lists preserving compositing order within each tile.
std::vector<std::vector<std::uint32_t>> bin_to_tiles(
    const std::vector<PreparedGaussian>& prepared, const Scene& scene, const TileGrid& grid,
    double cutoff);

}  // namespace mmsplat::detail
