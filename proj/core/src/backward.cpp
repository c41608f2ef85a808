#include "mmsplat/backward.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "internal/splat_math.hpp"
#include "mmsplat/parallel.hpp"

namespace mmsplat {

GradientSet::GradientSet(int mod_id, std::size_t n, int fdim)
    : modality_id(mod_id), feature_dim(fdim), count(n) {
    d_mean_x.assign(n, 0.0);
    d_mean_y.assign(n, 0.0);
    d_log_sx.assign(n, 0.0);
    d_log_sy.assign(n, 0.0);
    d_rotation.assign(n, 0.0);
    d_indicator_logit.assign(n, 0.0);
    d_shared_opacity_logit.assign(n, 0.0);
    d_features.assign(n * static_cast<std::size_t>(fdim), 0.0);
    contributed.assign(n, 0);
}

void GradientSet::scaled_add(const GradientSet& other, double scale) {
    if (other.count != count || other.feature_dim != feature_dim)
        throw std::invalid_argument("GradientSet::scaled_add: shape mismatch");
    for (std::size_t i = 0; i < count; ++i) {
        d_mean_x[i] += scale * other.d_mean_x[i];
        d_mean_y[i] += scale * other.d_mean_y[i];
        d_log_sx[i] += scale * other.d_log_sx[i];
        d_log_sy[i] += scale * other.d_log_sy[i];
        d_rotation[i] += scale * other.d_rotation[i];
        d_indicator_logit[i] += scale * other.d_indicator_logit[i];
        d_shared_opacity_logit[i] += scale * other.d_shared_opacity_logit[i];
    }
    for (std::size_t i = 0; i < d_features.size(); ++i)
        d_features[i] += scale * other.d_features[i];
    for (std::size_t i = 0; i < count; ++i)
        contributed[i] = contributed[i] || other.contributed[i];
}

bool GradientSet::all_finite() const {
    auto ok = [](const std::vector<double>& v) {
        return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
    };
    return ok(d_mean_x) && ok(d_mean_y) && ok(d_log_sx) && ok(d_log_sy) && ok(d_rotation) &&
           ok(d_indicator_logit) && ok(d_shared_opacity_logit) && ok(d_features);
}

namespace {

constexpr int kBackwardTileSize = 16;

// One gaussian's gradient row inside a tile-local buffer:
// [d_mean_x, d_mean_y, d_log_sx, d_log_sy, d_rotation, d_alpha_logit, d_features...]
constexpr std::size_t kFixedCols = 6;

struct TileBuffer {
    std::vector<std::uint32_t> ids;   // sorted unique scene indices touched
    std::vector<double> grads;        // ids.size() * (kFixedCols + C)
};

}  // namespace

GradientSet backward_modality(const Scene& scene, int modality_id, const CompositeTrace& trace,
                              const ModalityImage& d_image, int workers) {
    const ModalityDescriptor& desc = scene.modality(modality_id);
    const int W = scene.viewport.width, H = scene.viewport.height;
    const int C = desc.feature_dim;
    if (trace.modality_id != modality_id || trace.width != W || trace.height != H ||
        trace.gaussian_count != scene.size())
        throw std::invalid_argument("backward_modality: trace does not match scene");
    if (d_image.width != W || d_image.height != H || d_image.channels != C)
        throw std::invalid_argument("backward_modality: d_image shape mismatch");

    const bool shared = scene.mode == SceneMode::SharedOpacity;

    // Per-scene-index activation values, recomputed with the forward's math.
    struct Lite {
        double ct, st, inv_sx, inv_sy, alpha;
        const double* features;
    };
    std::vector<Lite> lite(scene.size());
    for (std::size_t i = 0; i < scene.size(); ++i) {
        const ModalGaussian& g = scene.gaussians[i];
        const auto& slot = g.slots[static_cast<std::size_t>(modality_id)];
        Lite& l = lite[i];
        l.ct = std::cos(g.rotation);
        l.st = std::sin(g.rotation);
        const double sx = std::exp(g.log_scales.x);
        const double sy = std::exp(g.log_scales.y);
        l.inv_sx = 1.0 / sx;
        l.inv_sy = 1.0 / sy;
        l.alpha = shared ? sigmoid(g.shared_opacity_logit)
                         : (slot.on ? activate_indicator(slot.indicator_logit) : 0.0);
        l.features = slot.features.data();
    }

    const Mat2 pix_to_world = scene.viewport.world_to_pixel.inverse();
    const Vec2 offset = scene.viewport.pixel_offset;

    const detail::TileGrid grid(W, H, kBackwardTileSize);
    std::vector<TileBuffer> tiles(static_cast<std::size_t>(grid.count()));
    const std::size_t stride = kFixedCols + static_cast<std::size_t>(C);

    parallel_for(static_cast<std::size_t>(grid.count()), workers, [&](std::size_t t) {
        const int ty = static_cast<int>(t) / grid.tiles_x;
        const int tx = static_cast<int>(t) % grid.tiles_x;
        const int r0 = ty * grid.tile_size, r1 = std::min(H, r0 + grid.tile_size);
        const int c0 = tx * grid.tile_size, c1 = std::min(W, c0 + grid.tile_size);

        TileBuffer& tb = tiles[t];
        // First-touch local indexing; the traversal order is fixed by the
        // trace, so the merge below stays deterministic.
        std::vector<std::int32_t> local_of(scene.size(), -1);
        for (int r = r0; r < r1; ++r) {
            const std::size_t row_base = static_cast<std::size_t>(r) * W;
            for (int c = c0; c < c1; ++c) {
                const std::size_t p = row_base + c;
                for (std::size_t e = trace.begin(p); e < trace.end(p); ++e) {
                    const std::uint32_t id = trace.entries[e].gaussian;
                    if (local_of[id] < 0) {
                        local_of[id] = static_cast<std::int32_t>(tb.ids.size());
                        tb.ids.push_back(id);
                    }
                }
            }
        }
        tb.grads.assign(tb.ids.size() * stride, 0.0);

        auto local_row = [&](std::uint32_t id) -> double* {
            return tb.grads.data() + static_cast<std::size_t>(local_of[id]) * stride;
        };

        // Scratch sized once to the deepest pixel in the tile.
        std::size_t max_depth = 0;
        for (int r = r0; r < r1; ++r)
            for (int c = c0; c < c1; ++c) {
                const std::size_t p = static_cast<std::size_t>(r) * W + c;
                max_depth = std::max(max_depth, trace.end(p) - trace.begin(p));
            }
        std::vector<double> scratch(max_depth * 5);
        double* a_buf = scratch.data();
        double* g_buf = a_buf + max_depth;
        double* gx_buf = g_buf + max_depth;
        double* gy_buf = gx_buf + max_depth;
        double* t_buf = gy_buf + max_depth;
        std::vector<double> behind(C);

        for (int r = r0; r < r1; ++r) {
            for (int c = c0; c < c1; ++c) {
                const std::size_t p = static_cast<std::size_t>(r) * W + c;
                const std::size_t e0 = trace.begin(p), e1 = trace.end(p);
                if (e0 == e1) continue;
                const std::size_t n = e1 - e0;

                const Vec2 px{static_cast<double>(c) + 0.5, static_cast<double>(r) + 0.5};
                const Vec2 x = pix_to_world * (px - offset);
                const double* dP = &d_image.at(r, c, 0);

                // Replay the forward recursion. The trace weight w = T*a
                // recovers a and g without another exp; the exp fallback only
                // runs when transmittance has collapsed below division safety.
                double transmittance = 1.0;
                for (std::size_t j = 0; j < n; ++j) {
                    const std::uint32_t id = trace.entries[e0 + j].gaussian;
                    const double w = trace.entries[e0 + j].weight;
                    const Lite& l = lite[id];
                    const ModalGaussian& gg = scene.gaussians[id];
                    const double dx = x.x - gg.mean.x;
                    const double dy = x.y - gg.mean.y;
                    gx_buf[j] = l.ct * dx + l.st * dy;
                    gy_buf[j] = -l.st * dx + l.ct * dy;
                    double a;
                    if (transmittance > 1e-12) {
                        a = w / transmittance;
                    } else {
                        const double ux = gx_buf[j] * l.inv_sx, uy = gy_buf[j] * l.inv_sy;
                        a = l.alpha * std::exp(-0.5 * (ux * ux + uy * uy));
                    }
                    g_buf[j] = a / l.alpha;
                    a_buf[j] = a;
                    t_buf[j] = transmittance;
                    transmittance = std::max(transmittance - w, 0.0);
                }

                // Back-to-front: behind[ch] is the composite of everything
                // behind gaussian j, as if transmittance there were 1.
                std::fill(behind.begin(), behind.end(), 0.0);
                for (std::size_t j = n; j-- > 0;) {
                    const std::uint32_t id = trace.entries[e0 + j].gaussian;
                    const Lite& l = lite[id];
                    const double a = a_buf[j], g = g_buf[j], T = t_buf[j];
                    const double w = T * a;

                    double d_a = 0.0;
                    double* row = local_row(id);
                    for (int ch = 0; ch < C; ++ch) {
                        const double f = l.features[ch];
                        d_a += dP[ch] * T * (f - behind[ch]);
                        row[kFixedCols + ch] += dP[ch] * w;
                        behind[ch] = a * f + (1.0 - a) * behind[ch];
                    }

                    // d alpha -> logit through the sigmoid.
                    row[5] += d_a * g * l.alpha * (1.0 - l.alpha);

                    // d g -> mean, log scales, rotation.
                    const double d_g = d_a * l.alpha;
                    const double d_q = d_g * (-0.5) * g;
                    const double gx = gx_buf[j], gy = gy_buf[j];
                    const double qx = 2.0 * gx * l.inv_sx * l.inv_sx;  // dq/d gx
                    const double qy = 2.0 * gy * l.inv_sy * l.inv_sy;  // dq/d gy
                    row[0] += d_q * (qx * -l.ct + qy * l.st);
                    row[1] += d_q * (qx * -l.st + qy * -l.ct);
                    row[2] += d_q * (-2.0 * gx * gx * l.inv_sx * l.inv_sx);
                    row[3] += d_q * (-2.0 * gy * gy * l.inv_sy * l.inv_sy);
                    row[4] += d_q * (qx * gy - qy * gx);
                }
            }
        }
    });

    // Deterministic reduction: tiles merged in index order.
    GradientSet out(modality_id, scene.size(), C);
    for (const TileBuffer& tb : tiles) {
        for (std::size_t k = 0; k < tb.ids.size(); ++k) {
            const std::size_t i = tb.ids[k];
            const double* row = tb.grads.data() + k * stride;
            out.d_mean_x[i] += row[0];
            out.d_mean_y[i] += row[1];
            out.d_log_sx[i] += row[2];
            out.d_log_sy[i] += row[3];
            out.d_rotation[i] += row[4];
            if (shared)
                out.d_shared_opacity_logit[i] += row[5];
            else
                out.d_indicator_logit[i] += row[5];
            double* feat = out.feature_row(i);
            for (int ch = 0; ch < C; ++ch) feat[ch] += row[kFixedCols + ch];
            out.contributed[i] = 1;
        }
    }
    return out;
}

void accumulate_positional_grads(Scene& scene, std::span<const GradientSet> per_modality) {
    for (const GradientSet& gs : per_modality) {
        if (gs.count != scene.size())
            throw std::invalid_argument("accumulate_positional_grads: stale gradient set");
        const std::size_t m = static_cast<std::size_t>(gs.modality_id);
        for (std::size_t i = 0; i < gs.count; ++i) {
            if (!gs.contributed[i]) continue;
            ModalitySlot& slot = scene.gaussians[i].slots[m];
            const Vec2 d = gs.d_mean(i);
            slot.grad_accum_norm += d.norm();
            slot.grad_accum_vec += d;
            slot.grad_count += 1;
        }
    }
}

}  // namespace mmsplat
