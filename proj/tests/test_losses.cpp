#include <cmath>
#include <random>

#include "doctest.h"
#include "mmsplat/backward.hpp"
#include "mmsplat/losses.hpp"
#include "mmsplat/render.hpp"
#include "oracles.hpp"

using namespace mmsplat;

namespace {

ModalityImage constant_image(int w, int h, int c, double value) {
    ModalityImage img(0, w, h, c);
    std::fill(img.data.begin(), img.data.end(), value);
    return img;
}

ModalityImage random_image(std::mt19937& rng, int w, int h, int c, double lo = 0.0,
                           double hi = 1.0) {
    std::uniform_real_distribution<double> dist(lo, hi);
    ModalityImage img(0, w, h, c);
    for (auto& v : img.data) v = dist(rng);
    return img;
}

// Finite-difference check of d_render for a loss functional.
template <typename LossFn>
void check_loss_gradient(const ModalityImage& render, const ModalityImage& truth, LossFn&& fn,
                         double eps = 1e-6) {
    const LossResult base = fn(render, truth);
    std::mt19937 pick(1234);
    std::uniform_int_distribution<std::size_t> idx(0, render.data.size() - 1);
    for (int k = 0; k < 40; ++k) {
        const std::size_t i = idx(pick);
        ModalityImage hi = render, lo = render;
        hi.data[i] += eps;
        lo.data[i] -= eps;
        const double numeric = (fn(hi, truth).value - fn(lo, truth).value) / (2.0 * eps);
        CHECK(oracle::grad_close(base.d_render.data[i], numeric, 1e-5, 1e-8));
    }
}

}  // namespace

TEST_CASE("rgb loss vanishes on identical images") {
    std::mt19937 rng(101);
    const ModalityImage img = random_image(rng, 8, 8, 3);
    const LossResult r = loss_rgb_like(img, img);
    CHECK(r.breakdown.l1 == 0.0);
    CHECK(r.breakdown.dssim == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(r.value == doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("constant offset shows up as the L1 component") {
    const auto a = constant_image(6, 6, 3, 0.4);
    const auto b = constant_image(6, 6, 3, 0.5);
    const LossResult r = loss_rgb_like(a, b);
    CHECK(r.breakdown.l1 == doctest::Approx(0.1).epsilon(1e-12));
}

TEST_CASE("rgb loss matches the naive L1/SSIM oracle on random pairs") {
    std::mt19937 rng(103);
    for (int trial = 0; trial < 5; ++trial) {
        const auto x = random_image(rng, 8, 8, 3);
        const auto y = random_image(rng, 8, 8, 3);
        const LossResult r = loss_rgb_like(x, y);
        const double expected_l1 = oracle::naive_l1(x, y);
        const double expected_dssim = 1.0 - oracle::naive_ssim(x, y);
        CHECK(r.breakdown.l1 == doctest::Approx(expected_l1).epsilon(1e-8));
        CHECK(r.breakdown.dssim == doctest::Approx(expected_dssim).epsilon(1e-8));
        CHECK(r.value ==
              doctest::Approx(0.8 * expected_l1 + 0.2 * expected_dssim).epsilon(1e-8));
    }
}

TEST_CASE("rgb loss gradient passes finite differences") {
    std::mt19937 rng(107);
    const auto render = random_image(rng, 7, 6, 3);
    auto truth = random_image(rng, 7, 6, 3);
    // Keep |render - truth| away from the L1 kink.
    for (std::size_t i = 0; i < truth.data.size(); ++i)
        truth.data[i] = render.data[i] + (truth.data[i] > 0.5 ? 0.2 : -0.2);
    check_loss_gradient(render, truth,
                        [](const auto& r, const auto& t) { return loss_rgb_like(r, t); });
}

TEST_CASE("thermal loss adds mean total variation") {
    const auto flat = constant_image(5, 5, 1, 0.3);
    CHECK(total_variation(flat) == 0.0);
    const LossResult r = loss_thermal(flat, flat, 0.6);
    CHECK(r.breakdown.smooth == 0.0);

    // Column ramp with step 0.1 on a 4x4 image: 12 horizontal pairs, no
    // vertical change, mean over 16 pixels.
    ModalityImage ramp(0, 4, 4, 1);
    for (int row = 0; row < 4; ++row)
        for (int col = 0; col < 4; ++col) ramp.at(row, col, 0) = 0.1 * col;
    CHECK(total_variation(ramp) == doctest::Approx(0.1 * 12.0 / 16.0).epsilon(1e-12));

    const LossResult ramp_loss = loss_thermal(ramp, ramp, 0.6);
    CHECK(ramp_loss.value ==
          doctest::Approx(0.6 * 0.1 * 12.0 / 16.0).epsilon(1e-12));  // only the TV term
}

TEST_CASE("thermal loss gradient passes finite differences") {
    std::mt19937 rng(109);
    const auto render = random_image(rng, 6, 6, 1);
    auto truth = random_image(rng, 6, 6, 1);
    for (std::size_t i = 0; i < truth.data.size(); ++i)
        truth.data[i] = render.data[i] + (truth.data[i] > 0.5 ? 0.15 : -0.15);
    check_loss_gradient(render, truth, [](const auto& r, const auto& t) {
        return loss_thermal(r, t, 0.6);
    });
}

TEST_CASE("language loss is the mean absolute error") {
    std::mt19937 rng(113);
    const auto img = random_image(rng, 4, 4, 3);
    CHECK(loss_language(img, img).value == 0.0);

    const auto a = constant_image(4, 4, 3, 0.1);
    const auto b = constant_image(4, 4, 3, 0.3);
    CHECK(loss_language(a, b).value == doctest::Approx(0.2).epsilon(1e-12));

    const auto x = random_image(rng, 4, 4, 3);
    const auto y = random_image(rng, 4, 4, 3);
    CHECK(loss_language(x, y).value == doctest::Approx(oracle::naive_l1(x, y)).epsilon(1e-10));

    ModalityImage wrong(0, 4, 5, 3);
    CHECK_THROWS_AS(loss_language(x, wrong), std::invalid_argument);
}

TEST_CASE("total loss composes the configured weights") {
    const std::vector<ModalityDescriptor> roster = {
        {0, "rgb", 3, LossKind::L1Dssim, 0.5, 0.0},
        {1, "thermal", 1, LossKind::L1DssimSmooth, 0.5, 0.6},
        {2, "language", 3, LossKind::FeatureL1, 0.2, 0.0},
    };
    std::vector<LossResult> unit_losses(3);
    for (auto& l : unit_losses) l.value = 1.0;
    CHECK(total_loss(roster, unit_losses).total == doctest::Approx(1.2).epsilon(1e-12));

    std::vector<LossResult> zeros(3);
    CHECK(total_loss(roster, zeros).total == 0.0);

    const std::vector<ModalityDescriptor> single = {{0, "only", 1, LossKind::FeatureL1, 1.0, 0.0}};
    std::vector<LossResult> one(1);
    one[0].value = 0.73;
    CHECK(total_loss(single, one).total == doctest::Approx(0.73).epsilon(1e-15));

    // Linear in each component.
    std::vector<LossResult> scaled = unit_losses;
    scaled[1].value = 3.0;
    CHECK(total_loss(roster, scaled).total ==
          doctest::Approx(0.5 + 1.5 + 0.2).epsilon(1e-12));

    CHECK_THROWS_AS(total_loss(roster, one), std::invalid_argument);
}

TEST_CASE("loss gradients survive the full render-to-loss chain") {
    std::mt19937 rng(127);
    oracle::SceneParams params;
    params.width = 8;
    params.height = 8;
    params.max_gaussians = 4;
    params.feature_dims = {3};
    Scene scene = oracle::random_scene(rng, params);

    // Truth offset from the current render keeps the L1 term smooth.
    const auto base = render_modality(scene, 0, RenderOptions::oracle());
    ModalityImage truth = base.image;
    for (auto& v : truth.data) v += 0.25;

    auto loss_of = [&](Scene& s) {
        const auto rr = render_modality(s, 0, RenderOptions::oracle());
        return loss_rgb_like(rr.image, truth).value;
    };

    const auto rr = render_modality(scene, 0, RenderOptions::oracle());
    const LossResult loss = loss_rgb_like(rr.image, truth);
    const GradientSet grads = backward_modality(scene, 0, rr.trace, loss.d_render);

    int failures = 0;
    for (std::size_t i = 0; i < scene.size(); ++i) {
        ModalGaussian& g = scene.gaussians[i];
        const double fd_mx = oracle::central_difference(scene, g.mean.x, loss_of);
        const double fd_logit =
            oracle::central_difference(scene, g.slots[0].indicator_logit, loss_of);
        if (!oracle::grad_close(grads.d_mean_x[i], fd_mx)) ++failures;
        if (!oracle::grad_close(grads.d_indicator_logit[i], fd_logit)) ++failures;
    }
    CHECK(failures == 0);
}
