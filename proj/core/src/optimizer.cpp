#include "mmsplat/optimizer.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace mmsplat {

std::size_t OptimizerState::stride_for(const std::vector<ModalityDescriptor>& roster) {
    std::size_t s = 6;  // mean(2) + log_scales(2) + rotation + shared logit
    for (const auto& m : roster) s += 1 + static_cast<std::size_t>(m.feature_dim);
    return s;
}

OptimizerState::OptimizerState(std::size_t gaussian_count,
                               const std::vector<ModalityDescriptor>& roster)
    : count_(gaussian_count), stride_(stride_for(roster)) {
    m_.assign(count_ * stride_, 0.0);
    v_.assign(count_ * stride_, 0.0);
}

void OptimizerState::remap(const std::vector<std::int64_t>& provenance) {
    std::vector<double> new_m(provenance.size() * stride_, 0.0);
    std::vector<double> new_v(provenance.size() * stride_, 0.0);
    for (std::size_t i = 0; i < provenance.size(); ++i) {
        const std::int64_t src = provenance[i];
        if (src < 0) continue;
        const double* mr = m_row(static_cast<std::size_t>(src));
        const double* vr = v_row(static_cast<std::size_t>(src));
        std::copy(mr, mr + stride_, new_m.data() + i * stride_);
        std::copy(vr, vr + stride_, new_v.data() + i * stride_);
    }
    m_ = std::move(new_m);
    v_ = std::move(new_v);
    count_ = provenance.size();
}

namespace {

inline void adam_update(double& param, double grad, double* m, double* v, double lr,
                        const AdamParams& p, double bc1, double bc2) {
    *m = p.beta1 * *m + (1.0 - p.beta1) * grad;
    *v = p.beta2 * *v + (1.0 - p.beta2) * grad * grad;
    const double mhat = *m / bc1;
    const double vhat = *v / bc2;
    param -= lr * mhat / (std::sqrt(vhat) + p.eps);
}

}  // namespace

void optimizer_step(Scene& scene, std::span<const GradientSet> per_modality,
                    const LearningRates& lr, OptimizerState& state, const AdamParams& adam) {
    const std::size_t n = scene.size();
    for (const auto& gs : per_modality) {
        if (gs.count != n)
            throw std::invalid_argument("optimizer_step: gradient set size mismatch");
        if (!gs.all_finite()) {
            for (std::size_t i = 0; i < n; ++i) {
                const bool bad = !std::isfinite(gs.d_mean_x[i]) || !std::isfinite(gs.d_mean_y[i]) ||
                                 !std::isfinite(gs.d_log_sx[i]) || !std::isfinite(gs.d_log_sy[i]) ||
                                 !std::isfinite(gs.d_rotation[i]) ||
                                 !std::isfinite(gs.d_indicator_logit[i]) ||
                                 !std::isfinite(gs.d_shared_opacity_logit[i]);
                if (bad)
                    throw std::runtime_error("optimizer_step: non-finite gradient at gaussian " +
                                             std::to_string(i));
                const double* f = gs.feature_row(i);
                for (int ch = 0; ch < gs.feature_dim; ++ch)
                    if (!std::isfinite(f[ch]))
                        throw std::runtime_error(
                            "optimizer_step: non-finite gradient at gaussian " + std::to_string(i));
            }
        }
    }
    if (state.count() != n || state.stride() != OptimizerState::stride_for(scene.modalities))
        throw std::invalid_argument("optimizer_step: optimizer state shape mismatch");
    if (per_modality.size() != scene.modalities.size())
        throw std::invalid_argument("optimizer_step: need one gradient set per modality");
    for (std::size_t m = 0; m < per_modality.size(); ++m)
        if (per_modality[m].modality_id != static_cast<int>(m))
            throw std::invalid_argument("optimizer_step: gradient sets must be in modality order");

    state.step += 1;
    const double bc1 = 1.0 - std::pow(adam.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(adam.beta2, static_cast<double>(state.step));
    const bool shared = scene.mode == SceneMode::SharedOpacity;

    for (std::size_t i = 0; i < n; ++i) {
        ModalGaussian& g = scene.gaussians[i];
        double* m = state.m_row(i);
        double* v = state.v_row(i);

        double d_mx = 0.0, d_my = 0.0, d_lsx = 0.0, d_lsy = 0.0, d_rot = 0.0, d_shared = 0.0;
        for (const auto& gs : per_modality) {
            d_mx += gs.d_mean_x[i];
            d_my += gs.d_mean_y[i];
            d_lsx += gs.d_log_sx[i];
            d_lsy += gs.d_log_sy[i];
            d_rot += gs.d_rotation[i];
            d_shared += gs.d_shared_opacity_logit[i];
        }
        adam_update(g.mean.x, d_mx, m + 0, v + 0, lr.means, adam, bc1, bc2);
        adam_update(g.mean.y, d_my, m + 1, v + 1, lr.means, adam, bc1, bc2);
        adam_update(g.log_scales.x, d_lsx, m + 2, v + 2, lr.log_scales, adam, bc1, bc2);
        adam_update(g.log_scales.y, d_lsy, m + 3, v + 3, lr.log_scales, adam, bc1, bc2);
        adam_update(g.rotation, d_rot, m + 4, v + 4, lr.rotation, adam, bc1, bc2);
        if (shared)
            adam_update(g.shared_opacity_logit, d_shared, m + 5, v + 5, lr.indicators, adam, bc1,
                        bc2);

        std::size_t base = 6;
        for (const auto& gs : per_modality) {
            const std::size_t mod = static_cast<std::size_t>(gs.modality_id);
            ModalitySlot& slot = g.slots[mod];
            const std::size_t fdim = static_cast<std::size_t>(gs.feature_dim);
            // Off slots are frozen outright; in shared mode the indicator
            // logit is unused and likewise left untouched.
            const bool slot_active = shared || slot.on;
            if (slot_active) {
                if (!shared)
                    adam_update(slot.indicator_logit, gs.d_indicator_logit[i], m + base, v + base,
                                lr.indicators, adam, bc1, bc2);
                const double* df = gs.feature_row(i);
                for (std::size_t ch = 0; ch < fdim; ++ch)
                    adam_update(slot.features[ch], df[ch], m + base + 1 + ch, v + base + 1 + ch,
                                lr.features, adam, bc1, bc2);
            }
            base += 1 + fdim;
        }
    }
}

}  // namespace mmsplat
