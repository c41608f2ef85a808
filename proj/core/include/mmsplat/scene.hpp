#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mmsplat/geometry.hpp"

namespace mmsplat {

enum class LossKind : std::uint8_t {
    L1Dssim = 0,        // (1-lambda)*L1 + lambda*(1-SSIM)
    L1DssimSmooth = 1,  // L1Dssim plus smooth_weight * total variation
    FeatureL1 = 2,      // mean absolute error over pixels and channels
};

const char* loss_kind_name(LossKind k);
LossKind loss_kind_from_name(const std::string& name);

// Declares one modality of the scene: how wide its feature vectors are and
// which loss recipe trains it.
struct ModalityDescriptor {
    int id = 0;
    std::string name;
    int feature_dim = 1;
    LossKind loss_kind = LossKind::L1Dssim;
    double loss_weight = 0.5;
    double smooth_weight = 0.0;  // only read by L1DssimSmooth
};

// Per-modality state of one Gaussian. `on` is an exact switch: an off slot
// contributes nothing to that modality's render and receives no gradient,
// independent of the stored logit.
struct ModalitySlot {
    double indicator_logit = 0.0;
    bool on = true;
    std::vector<double> features;  // length = descriptor.feature_dim

    // Positional-gradient accumulators, reset after every densify pass.
    // The norm sum drives clone/split; the vector sum drives the
    // per-modality gradient difference.
    double grad_accum_norm = 0.0;
    Vec2 grad_accum_vec{0.0, 0.0};
    std::uint64_t grad_count = 0;

    void reset_grad_accum() {
        grad_accum_norm = 0.0;
        grad_accum_vec = {0.0, 0.0};
        grad_count = 0;
    }
};

struct ModalGaussian {
    Vec2 mean{0.0, 0.0};
    Vec2 log_scales{0.0, 0.0};
    double rotation = 0.0;
    double depth = 0.0;                 // compositing order key, not optimized
    double shared_opacity_logit = 0.0;  // read only in shared-opacity mode
    std::vector<ModalitySlot> slots;    // one per declared modality

    int active_slot_count() const {
        int n = 0;
        for (const auto& s : slots) n += s.on ? 1 : 0;
        return n;
    }
};

enum class SceneMode : std::uint8_t {
    SharedOpacity = 0,         // joint-training baseline: one alpha for all modalities
    PerModalityIndicator = 1,  // one indicator per modality acting as weight and switch
};

// Maps world coordinates to continuous pixel coordinates. Pixel (row r,
// col c) covers [c,c+1) x [r,r+1) with its center at (c+0.5, r+0.5).
struct Viewport {
    int width = 0;
    int height = 0;
    Mat2 world_to_pixel{};      // linear part
    Vec2 pixel_offset{0.0, 0.0};

    Vec2 to_pixel(const Vec2& world) const { return world_to_pixel * world + pixel_offset; }
    Vec2 to_world(const Vec2& pixel) const {
        return world_to_pixel.inverse() * (pixel - pixel_offset);
    }
    Vec2 pixel_center_world(int row, int col) const {
        return to_world({static_cast<double>(col) + 0.5, static_cast<double>(row) + 0.5});
    }
};

struct Scene {
    std::vector<ModalGaussian> gaussians;
    std::vector<ModalityDescriptor> modalities;
    SceneMode mode = SceneMode::PerModalityIndicator;
    Viewport viewport;

    std::size_t size() const { return gaussians.size(); }
    const ModalityDescriptor& modality(int id) const;
    bool has_modality(int id) const {
        return id >= 0 && id < static_cast<int>(modalities.size());
    }
    // Throws if modality ids are not dense 0..m-1 or a Gaussian's slot/feature
    // shapes disagree with the roster.
    void validate() const;

    // Effective alpha of gaussian g for modality m under the scene mode.
    // Off slots in indicator mode report 0 (the caller must still skip them
    // entirely; this is a convenience for diagnostics).
    double effective_alpha(std::size_t g, int m) const;
};

// --- scene-model operations -------------------------------------------------

// Maps an indicator logit to (0,1). Throws on non-finite input.
double activate_indicator(double logit);

// R(theta) * diag(exp(2*log_s)) * R(theta)^T
Mat2 covariance(const ModalGaussian& g);

// Unnormalized density exp(-0.5 * (x-mu)^T Sigma^{-1} (x-mu)); 1 at the mean.
// Throws when a scale underflowed to zero, making the covariance singular.
double evaluate_gaussian(const ModalGaussian& g, const Vec2& x_world);

// Builds a Gaussian with one slot per descriptor, features zero-filled.
ModalGaussian make_gaussian(const std::vector<ModalityDescriptor>& modalities);

}  // namespace mmsplat
