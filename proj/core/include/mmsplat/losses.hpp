#pragma once

#include <string>
#include <vector>

#include "mmsplat/image.hpp"
#include "mmsplat/scene.hpp"

namespace mmsplat {

struct LossBreakdown {
    double l1 = 0.0;
    double dssim = 0.0;       // 1 - mean SSIM
    double smooth = 0.0;      // total variation term, before smooth_weight
    double feature_l1 = 0.0;
};

// Scalar loss plus its analytic gradient with respect to the render.
struct LossResult {
    double value = 0.0;
    LossBreakdown breakdown;
    ModalityImage d_render;
};

inline constexpr double kDefaultSsimLambda = 0.2;

// (1-lambda)*L1 + lambda*(1-SSIM). Throws on shape mismatch.
LossResult loss_rgb_like(const ModalityImage& render, const ModalityImage& truth,
                         double lambda_ssim = kDefaultSsimLambda);

// loss_rgb_like plus lambda_smooth * TV(render), TV = mean of |forward dx| +
// |forward dy| over pixels and channels.
LossResult loss_thermal(const ModalityImage& render, const ModalityImage& truth,
                        double lambda_smooth, double lambda_ssim = kDefaultSsimLambda);

// Mean absolute error over all pixels and channels.
LossResult loss_language(const ModalityImage& render, const ModalityImage& truth);

// Dispatch on the descriptor's loss recipe.
LossResult modality_loss(const ModalityDescriptor& desc, const ModalityImage& render,
                         const ModalityImage& truth, double lambda_ssim = kDefaultSsimLambda);

struct LossReport {
    struct Entry {
        int modality_id = -1;
        std::string name;
        double weight = 0.0;
        double loss = 0.0;  // unweighted
        LossBreakdown breakdown;
    };
    std::vector<Entry> per_modality;
    double total = 0.0;  // sum of weight * loss
};

// Weighted sum across modalities; weights come from the descriptors.
LossReport total_loss(const std::vector<ModalityDescriptor>& roster,
                      const std::vector<LossResult>& losses);

// Mean total variation with forward differences; exposed for tests.
double total_variation(const ModalityImage& img);

// Channel-averaged windowed SSIM value (no gradient); shared with metrics.
double mean_ssim(const ModalityImage& render, const ModalityImage& truth);

}  // namespace mmsplat
