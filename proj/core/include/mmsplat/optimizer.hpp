#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mmsplat/backward.hpp"
#include "mmsplat/scene.hpp"

namespace mmsplat {

struct LearningRates {
    double means = 1.6e-4;
    double log_scales = 5e-3;
    double rotation = 1e-3;
    double indicators = 5e-2;  // also used for the shared opacity logit
    double features = 2.5e-3;
};

struct AdamParams {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-15;
};

// Adam moments laid out per gaussian: mean(2), log_scales(2), rotation(1),
// shared_opacity_logit(1), then per modality indicator_logit(1) + features(d_m).
class OptimizerState {
public:
    OptimizerState() = default;
    OptimizerState(std::size_t gaussian_count, const std::vector<ModalityDescriptor>& roster);

    static std::size_t stride_for(const std::vector<ModalityDescriptor>& roster);

    std::size_t count() const { return count_; }
    std::size_t stride() const { return stride_; }
    std::uint64_t step = 0;

    double* m_row(std::size_t i) { return m_.data() + i * stride_; }
    double* v_row(std::size_t i) { return v_.data() + i * stride_; }
    const double* m_row(std::size_t i) const { return m_.data() + i * stride_; }
    const double* v_row(std::size_t i) const { return v_.data() + i * stride_; }

    // Rebuild after densification: provenance[i] >= 0 copies the old row,
    // -1 starts the new gaussian with zero moments.
    void remap(const std::vector<std::int64_t>& provenance);

    std::vector<double>& raw_m() { return m_; }
    std::vector<double>& raw_v() { return v_; }
    const std::vector<double>& raw_m() const { return m_; }
    const std::vector<double>& raw_v() const { return v_; }

private:
    std::size_t count_ = 0;
    std::size_t stride_ = 0;
    std::vector<double> m_;
    std::vector<double> v_;
};

// One first-order adaptive-moment update over all parameter groups. Gradients
// arrive per modality and are summed here. Slots switched off for a modality
// are skipped entirely: neither parameters nor moments change. Throws on a
// non-finite gradient, naming the gaussian index.
void optimizer_step(Scene& scene, std::span<const GradientSet> per_modality,
                    const LearningRates& lr, OptimizerState& state,
                    const AdamParams& adam = AdamParams{});

}  // namespace mmsplat
