#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mmsplat/render.hpp"
#include "mmsplat/scene.hpp"

namespace mmsplat {

// Gradients of one modality's scalar loss with respect to every Gaussian
// parameter, SoA over gaussian index. Slots that are switched off for the
// modality are never touched and stay exactly zero.
struct GradientSet {
    int modality_id = -1;
    int feature_dim = 0;
    std::size_t count = 0;

    std::vector<double> d_mean_x, d_mean_y;
    std::vector<double> d_log_sx, d_log_sy;
    std::vector<double> d_rotation;
    std::vector<double> d_indicator_logit;       // per-modality-indicator mode
    std::vector<double> d_shared_opacity_logit;  // shared-opacity mode
    std::vector<double> d_features;              // count * feature_dim, row per gaussian
    std::vector<std::uint8_t> contributed;       // touched >= 1 pixel this pass

    GradientSet() = default;
    GradientSet(int mod_id, std::size_t n, int fdim);

    Vec2 d_mean(std::size_t i) const { return {d_mean_x[i], d_mean_y[i]}; }
    double* feature_row(std::size_t i) { return d_features.data() + i * feature_dim; }
    const double* feature_row(std::size_t i) const { return d_features.data() + i * feature_dim; }

    void scaled_add(const GradientSet& other, double scale);  // this += scale * other
    bool all_finite() const;
};

// Analytic reverse pass through the forward composite recorded in `trace`.
// `d_image` is dL/d(render), same shape as the forward output. Throws when
// the trace does not match the scene or the image shape.
GradientSet backward_modality(const Scene& scene, int modality_id, const CompositeTrace& trace,
                              const ModalityImage& d_image, int workers = 0);

// Folds each modality's positional gradient into the per-slot accumulators:
// norm sum, vector sum, and contribution count.
void accumulate_positional_grads(Scene& scene, std::span<const GradientSet> per_modality);

}  // namespace mmsplat
