#pragma once

#include <vector>

#include "mmsplat/image.hpp"

namespace mmsplat {

// 10*log10(1/MSE) for values in [0,1]; capped at 100 dB when MSE < 1e-10.
double psnr(const ModalityImage& render, const ModalityImage& truth);

// Mean windowed SSIM (11x11 gaussian window, sigma 1.5, K1=0.01, K2=0.03),
// averaged over channels.
double ssim(const ModalityImage& render, const ModalityImage& truth);

// Mean over queries of |intersection| / |union|. Two empty masks agree
// perfectly and score 1.
double miou(const std::vector<Mask>& pred_masks, const std::vector<Mask>& truth_masks);

struct PixelPoint {
    int row = 0;
    int col = 0;
};

// Fraction of queries whose predicted point lands inside the truth mask.
double localization_accuracy(const std::vector<PixelPoint>& pred_points,
                             const std::vector<Mask>& truth_masks);

// Nearest-label classification of a rendered feature map against a label
// feature table. The background class is the implicit zero vector; ties go
// to the lower class index, background last.
std::vector<Mask> nearest_label_masks(const ModalityImage& features,
                                      const std::vector<std::vector<double>>& label_table);

// Per label, the pixel whose feature is closest to the label feature
// (row-major first on ties).
std::vector<PixelPoint> peak_relevancy_points(const ModalityImage& features,
                                              const std::vector<std::vector<double>>& label_table);

}  // namespace mmsplat
