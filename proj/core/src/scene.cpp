#include "mmsplat/scene.hpp"

#include <cmath>
#include <stdexcept>

namespace mmsplat {

const char* loss_kind_name(LossKind k) {
    switch (k) {
        case LossKind::L1Dssim: return "l1_dssim";
        case LossKind::L1DssimSmooth: return "l1_dssim_smooth";
        case LossKind::FeatureL1: return "feature_l1";
    }
    throw std::invalid_argument("unknown LossKind");
}

LossKind loss_kind_from_name(const std::string& name) {
    if (name == "l1_dssim") return LossKind::L1Dssim;
    if (name == "l1_dssim_smooth") return LossKind::L1DssimSmooth;
    if (name == "feature_l1") return LossKind::FeatureL1;
    throw std::invalid_argument("unknown loss kind: " + name);
}

const ModalityDescriptor& Scene::modality(int id) const {
    if (!has_modality(id))
        throw std::out_of_range("undeclared modality id " + std::to_string(id));
    return modalities[static_cast<std::size_t>(id)];
}

void Scene::validate() const {
    for (std::size_t i = 0; i < modalities.size(); ++i) {
        const auto& m = modalities[i];
        if (m.id != static_cast<int>(i))
            throw std::invalid_argument("modality ids must be dense 0..m-1");
        if (m.feature_dim < 1)
            throw std::invalid_argument("feature_dim must be >= 1 for modality " + m.name);
        if (!(m.loss_weight >= 0.0) || !std::isfinite(m.loss_weight))
            throw std::invalid_argument("loss_weight must be finite and >= 0");
        if (!(m.smooth_weight >= 0.0) || !std::isfinite(m.smooth_weight))
            throw std::invalid_argument("smooth_weight must be finite and >= 0");
    }
    for (const auto& g : gaussians) {
        if (g.slots.size() != modalities.size())
            throw std::invalid_argument("gaussian must carry one slot per declared modality");
        for (std::size_t m = 0; m < g.slots.size(); ++m) {
            if (g.slots[m].features.size() !=
                static_cast<std::size_t>(modalities[m].feature_dim))
                throw std::invalid_argument("feature vector length mismatch for modality " +
                                            modalities[m].name);
        }
    }
}

double Scene::effective_alpha(std::size_t g, int m) const {
    const auto& gg = gaussians.at(g);
    if (mode == SceneMode::SharedOpacity) return sigmoid(gg.shared_opacity_logit);
    const auto& slot = gg.slots.at(static_cast<std::size_t>(m));
    return slot.on ? activate_indicator(slot.indicator_logit) : 0.0;
}

double activate_indicator(double logit) {
    if (!std::isfinite(logit))
        throw std::invalid_argument("activate_indicator: non-finite logit");
    return sigmoid(logit);
}

Mat2 covariance(const ModalGaussian& g) {
    if (!g.log_scales.finite() || !std::isfinite(g.rotation))
        throw std::invalid_argument("covariance: non-finite scales or rotation");
    const double sx = std::exp(g.log_scales.x);
    const double sy = std::exp(g.log_scales.y);
    const Mat2 r = Mat2::rotation(g.rotation);
    return r * Mat2::diag(sx * sx, sy * sy) * r.transpose();
}

double evaluate_gaussian(const ModalGaussian& g, const Vec2& x_world) {
    const double sx = std::exp(g.log_scales.x);
    const double sy = std::exp(g.log_scales.y);
    if (sx <= 0.0 || sy <= 0.0 || !std::isfinite(sx) || !std::isfinite(sy))
        throw std::runtime_error("evaluate_gaussian: singular covariance (scale underflow)");
    const Vec2 d = x_world - g.mean;
    // Rotate into the gaussian frame: q = (d'_x/sx)^2 + (d'_y/sy)^2.
    const double ct = std::cos(g.rotation), st = std::sin(g.rotation);
    const double dx = ct * d.x + st * d.y;
    const double dy = -st * d.x + ct * d.y;
    const double q = (dx / sx) * (dx / sx) + (dy / sy) * (dy / sy);
    return std::exp(-0.5 * q);
}

ModalGaussian make_gaussian(const std::vector<ModalityDescriptor>& modalities) {
    ModalGaussian g;
    g.slots.resize(modalities.size());
    for (std::size_t m = 0; m < modalities.size(); ++m)
        g.slots[m].features.assign(static_cast<std::size_t>(modalities[m].feature_dim), 0.0);
    return g;
}

}  // namespace mmsplat
