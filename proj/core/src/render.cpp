#include "mmsplat/render.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "internal/splat_math.hpp"
#include "mmsplat/parallel.hpp"

namespace mmsplat {

std::vector<std::uint32_t> sort_for_compositing(const Scene& scene) {
    for (const auto& g : scene.gaussians)
        if (!std::isfinite(g.depth))
            throw std::invalid_argument("sort_for_compositing: non-finite depth");
    std::vector<std::uint32_t> order(scene.size());
    std::iota(order.begin(), order.end(), 0u);
    std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
        const double da = scene.gaussians[a].depth, db = scene.gaussians[b].depth;
        if (da != db) return da < db;
        return a < b;
    });
    return order;
}

namespace detail {

std::vector<PreparedGaussian> prepare_gaussians(const Scene& scene, int modality_id,
                                                const std::vector<std::uint32_t>& order,
                                                double cutoff) {
    const bool shared = scene.mode == SceneMode::SharedOpacity;
    // Screen-space extent of the g >= cutoff ellipse, via the largest
    // singular value of the world-to-pixel map.
    const double map_norm = scene.viewport.world_to_pixel.operator_norm();
    const double q_radius = cutoff > 0.0 ? std::sqrt(2.0 * std::log(1.0 / cutoff))
                                         : std::numeric_limits<double>::infinity();

    std::vector<PreparedGaussian> out;
    out.reserve(order.size());
    for (const std::uint32_t idx : order) {
        const ModalGaussian& g = scene.gaussians[idx];
        const auto& slot = g.slots[static_cast<std::size_t>(modality_id)];
        if (!shared && !slot.on) continue;  // switch semantics: skipped entirely
        PreparedGaussian p;
        p.scene_index = idx;
        p.mean = g.mean;
        p.ct = std::cos(g.rotation);
        p.st = std::sin(g.rotation);
        p.sx = std::exp(g.log_scales.x);
        p.sy = std::exp(g.log_scales.y);
        if (p.sx <= 0.0 || p.sy <= 0.0 || !std::isfinite(p.sx) || !std::isfinite(p.sy))
            throw std::runtime_error("render: singular covariance (scale underflow)");
        p.inv_sx = 1.0 / p.sx;
        p.inv_sy = 1.0 / p.sy;
        p.alpha = shared ? sigmoid(g.shared_opacity_logit)
                         : activate_indicator(slot.indicator_logit);
        p.features = slot.features.data();
        const double world_radius = std::max(p.sx, p.sy) * q_radius;
        p.pixel_radius = world_radius * map_norm;
        p.reject_dist_sq = cutoff > 0.0
                               ? world_radius * world_radius * (1.0 + 1e-9)
                               : std::numeric_limits<double>::infinity();
        out.push_back(p);
    }
    return out;
}

std::vector<std::vector<std::uint32_t>> bin_to_tiles(
    const std::vector<PreparedGaussian>& prepared, const Scene& scene, const TileGrid& grid,
    double cutoff) {
    std::vector<std::vector<std::uint32_t>> tiles(static_cast<std::size_t>(grid.count()));
    const bool cull = cutoff > 0.0;
    for (std::uint32_t k = 0; k < prepared.size(); ++k) {
        int tx0 = 0, tx1 = grid.tiles_x - 1, ty0 = 0, ty1 = grid.tiles_y - 1;
        if (cull) {
            const Vec2 center = scene.viewport.to_pixel(prepared[k].mean);
            const double r = prepared[k].pixel_radius;
            tx0 = std::max(0, static_cast<int>(std::floor((center.x - r) / grid.tile_size)));
            tx1 = std::min(grid.tiles_x - 1,
                           static_cast<int>(std::floor((center.x + r) / grid.tile_size)));
            ty0 = std::max(0, static_cast<int>(std::floor((center.y - r) / grid.tile_size)));
            ty1 = std::min(grid.tiles_y - 1,
                           static_cast<int>(std::floor((center.y + r) / grid.tile_size)));
        }
        for (int ty = ty0; ty <= ty1; ++ty)
            for (int tx = tx0; tx <= tx1; ++tx)
                tiles[static_cast<std::size_t>(ty) * grid.tiles_x + tx].push_back(k);
    }
    return tiles;
}

}  // namespace detail

namespace {

struct TileTrace {
    std::vector<CompositeTrace::Entry> entries;
    std::vector<std::uint32_t> per_pixel_counts;  // row-major within the tile
};

}  // namespace

RenderResult render_modality(const Scene& scene, int modality_id, const RenderOptions& opts) {
    const ModalityDescriptor& desc = scene.modality(modality_id);
    if (!(opts.cutoff >= 0.0 && opts.cutoff < 1.0))
        throw std::invalid_argument("render: cutoff must lie in [0,1)");
    const int W = scene.viewport.width, H = scene.viewport.height;
    const int C = desc.feature_dim;

    RenderResult result;
    result.image = ModalityImage(modality_id, W, H, C);
    result.trace.modality_id = modality_id;
    result.trace.width = W;
    result.trace.height = H;
    result.trace.gaussian_count = scene.size();

    const auto order = sort_for_compositing(scene);
    const auto prepared = detail::prepare_gaussians(scene, modality_id, order, opts.cutoff);

    const detail::TileGrid grid(W, H, opts.tile_size);
    const auto tile_lists = detail::bin_to_tiles(prepared, scene, grid, opts.cutoff);

    // Pixel centers in world coordinates, via the inverse map computed once.
    const Mat2 pix_to_world = scene.viewport.world_to_pixel.inverse();
    const Vec2 offset = scene.viewport.pixel_offset;

    std::vector<TileTrace> tile_traces(static_cast<std::size_t>(grid.count()));
    ModalityImage& image = result.image;

    parallel_for(static_cast<std::size_t>(grid.count()), opts.workers, [&](std::size_t t) {
        const int ty = static_cast<int>(t) / grid.tiles_x;
        const int tx = static_cast<int>(t) % grid.tiles_x;
        const int r0 = ty * grid.tile_size, r1 = std::min(H, r0 + grid.tile_size);
        const int c0 = tx * grid.tile_size, c1 = std::min(W, c0 + grid.tile_size);
        const auto& candidates = tile_lists[t];
        TileTrace& tt = tile_traces[t];
        tt.per_pixel_counts.assign(static_cast<std::size_t>(r1 - r0) * (c1 - c0), 0);

        std::size_t pix_in_tile = 0;
        for (int r = r0; r < r1; ++r) {
            for (int c = c0; c < c1; ++c, ++pix_in_tile) {
                const Vec2 px{static_cast<double>(c) + 0.5, static_cast<double>(r) + 0.5};
                const Vec2 x = pix_to_world * (px - offset);
                double transmittance = 1.0;
                std::uint32_t count = 0;
                double* out = &image.at(r, c, 0);
                for (const std::uint32_t k : candidates) {
                    const detail::PreparedGaussian& p = prepared[k];
                    const double ddx = x.x - p.mean.x;
                    const double ddy = x.y - p.mean.y;
                    if (ddx * ddx + ddy * ddy > p.reject_dist_sq) continue;
                    const double g = detail::eval_prepared(p, x).g;
                    if (g < opts.cutoff || g == 0.0) continue;
                    const double a = p.alpha * g;
                    const double w = transmittance * a;
                    for (int ch = 0; ch < C; ++ch) out[ch] += w * p.features[ch];
                    tt.entries.push_back({p.scene_index, w});
                    ++count;
                    transmittance *= 1.0 - a;
                    if (opts.early_stop && transmittance < opts.early_stop_transmittance) break;
                }
                if (opts.background != 0.0)
                    for (int ch = 0; ch < C; ++ch) out[ch] += transmittance * opts.background;
                tt.per_pixel_counts[pix_in_tile] = count;
            }
        }
    });

    // Stitch tile traces together in tile order; entries stay tile-major and
    // each pixel records its segment, so no per-pixel copies are needed.
    CompositeTrace& trace = result.trace;
    trace.starts.assign(static_cast<std::size_t>(W) * H, 0);
    trace.counts.assign(static_cast<std::size_t>(W) * H, 0);
    std::size_t total = 0;
    for (const TileTrace& tt : tile_traces) total += tt.entries.size();
    trace.entries.reserve(total);
    std::size_t base = 0;
    for (int t = 0; t < grid.count(); ++t) {
        const int ty = t / grid.tiles_x, tx = t % grid.tiles_x;
        const int r0 = ty * grid.tile_size, r1 = std::min(H, r0 + grid.tile_size);
        const int c0 = tx * grid.tile_size, c1 = std::min(W, c0 + grid.tile_size);
        const TileTrace& tt = tile_traces[static_cast<std::size_t>(t)];
        trace.entries.insert(trace.entries.end(), tt.entries.begin(), tt.entries.end());
        std::size_t pix_in_tile = 0;
        for (int r = r0; r < r1; ++r) {
            for (int c = c0; c < c1; ++c, ++pix_in_tile) {
                const std::size_t p = static_cast<std::size_t>(r) * W + c;
                trace.starts[p] = static_cast<std::uint32_t>(base);
                trace.counts[p] = tt.per_pixel_counts[pix_in_tile];
                base += tt.per_pixel_counts[pix_in_tile];
            }
        }
    }
    return result;
}

std::vector<RenderResult> render_all(const Scene& scene, const RenderOptions& opts) {
    std::vector<RenderResult> out;
    out.reserve(scene.modalities.size());
    for (const auto& m : scene.modalities) out.push_back(render_modality(scene, m.id, opts));
    return out;
}

}  // namespace mmsplat
