#include "mmsplat/metrics.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "mmsplat/losses.hpp"

namespace mmsplat {

double psnr(const ModalityImage& render, const ModalityImage& truth) {
    if (!render.same_shape(truth)) throw std::invalid_argument("psnr: shape mismatch");
    double mse = 0.0;
    for (std::size_t i = 0; i < render.data.size(); ++i) {
        const double d = render.data[i] - truth.data[i];
        mse += d * d;
    }
    mse /= static_cast<double>(render.data.size());
    if (mse < 1e-10) return 100.0;
    return -10.0 * std::log10(mse);
}

double ssim(const ModalityImage& render, const ModalityImage& truth) {
    return mean_ssim(render, truth);
}

double miou(const std::vector<Mask>& pred_masks, const std::vector<Mask>& truth_masks) {
    if (pred_masks.size() != truth_masks.size())
        throw std::invalid_argument("miou: query count mismatch");
    if (pred_masks.empty()) throw std::invalid_argument("miou: no queries");
    double total = 0.0;
    for (std::size_t q = 0; q < pred_masks.size(); ++q) {
        const Mask& p = pred_masks[q];
        const Mask& t = truth_masks[q];
        if (p.width != t.width || p.height != t.height)
            throw std::invalid_argument("miou: mask shape mismatch");
        std::size_t inter = 0, uni = 0;
        for (std::size_t i = 0; i < p.data.size(); ++i) {
            const bool a = p.data[i] != 0, b = t.data[i] != 0;
            inter += (a && b) ? 1 : 0;
            uni += (a || b) ? 1 : 0;
        }
        total += uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
    }
    return total / static_cast<double>(pred_masks.size());
}

double localization_accuracy(const std::vector<PixelPoint>& pred_points,
                             const std::vector<Mask>& truth_masks) {
    if (pred_points.size() != truth_masks.size())
        throw std::invalid_argument("localization_accuracy: query count mismatch");
    if (pred_points.empty()) throw std::invalid_argument("localization_accuracy: no queries");
    std::size_t hits = 0;
    for (std::size_t q = 0; q < pred_points.size(); ++q) {
        const PixelPoint& pt = pred_points[q];
        const Mask& t = truth_masks[q];
        if (pt.row >= 0 && pt.row < t.height && pt.col >= 0 && pt.col < t.width &&
            t.at(pt.row, pt.col) != 0)
            ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(pred_points.size());
}

namespace {

double sq_dist(const double* feat, const std::vector<double>& label, int dim) {
    double d = 0.0;
    for (int ch = 0; ch < dim; ++ch) {
        const double diff = feat[ch] - label[static_cast<std::size_t>(ch)];
        d += diff * diff;
    }
    return d;
}

}  // namespace

std::vector<Mask> nearest_label_masks(const ModalityImage& features,
                                      const std::vector<std::vector<double>>& label_table) {
    const int L = static_cast<int>(label_table.size());
    const int C = features.channels;
    for (const auto& f : label_table)
        if (static_cast<int>(f.size()) != C)
            throw std::invalid_argument("nearest_label_masks: label feature dim mismatch");
    const std::vector<double> background(static_cast<std::size_t>(C), 0.0);

    std::vector<Mask> masks(static_cast<std::size_t>(L),
                            Mask(features.width, features.height));
    for (int r = 0; r < features.height; ++r) {
        for (int c = 0; c < features.width; ++c) {
            const double* feat = &features.at(r, c, 0);
            int best = 0;
            double best_d = L > 0 ? sq_dist(feat, label_table[0], C)
                                  : std::numeric_limits<double>::infinity();
            for (int l = 1; l < L; ++l) {
                const double d = sq_dist(feat, label_table[static_cast<std::size_t>(l)], C);
                if (d < best_d) {
                    best_d = d;
                    best = l;
                }
            }
            if (sq_dist(feat, background, C) < best_d) best = L;  // background wins only strictly
            if (best < L) masks[static_cast<std::size_t>(best)].at(r, c) = 1;
        }
    }
    return masks;
}

std::vector<PixelPoint> peak_relevancy_points(const ModalityImage& features,
                                              const std::vector<std::vector<double>>& label_table) {
    std::vector<PixelPoint> points;
    points.reserve(label_table.size());
    for (const auto& label : label_table) {
        if (static_cast<int>(label.size()) != features.channels)
            throw std::invalid_argument("peak_relevancy_points: label feature dim mismatch");
        double best = std::numeric_limits<double>::infinity();
        PixelPoint pt;
        for (int r = 0; r < features.height; ++r)
            for (int c = 0; c < features.width; ++c) {
                const double d = sq_dist(&features.at(r, c, 0), label, features.channels);
                if (d < best) {
                    best = d;
                    pt = {r, c};
                }
            }
        points.push_back(pt);
    }
    return points;
}

}  // namespace mmsplat
