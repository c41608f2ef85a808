#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "doctest.h"
#include "mmsplat/image.hpp"
#include "mmsplat/render.hpp"
#include "oracles.hpp"

using namespace mmsplat;

namespace {

Scene single_modality_scene(int w, int h, int feature_dim = 1) {
    Scene scene;
    scene.viewport.width = w;
    scene.viewport.height = h;
    scene.modalities = {{0, "m0", feature_dim, LossKind::FeatureL1, 1.0, 0.0}};
    return scene;
}

ModalGaussian at(const Scene& scene, Vec2 mean, double alpha, double feature, double depth,
                 double scale = 1.0) {
    ModalGaussian g = make_gaussian(scene.modalities);
    g.mean = mean;
    g.log_scales = {std::log(scale), std::log(scale)};
    g.depth = depth;
    g.slots[0].indicator_logit = logit(alpha);
    std::fill(g.slots[0].features.begin(), g.slots[0].features.end(), feature);
    return g;
}

bool images_bitwise_equal(const ModalityImage& a, const ModalityImage& b) {
    return a.same_shape(b) && a.data == b.data;
}

}  // namespace

TEST_CASE("compositing order sorts by depth with stable ties") {
    Scene scene = single_modality_scene(4, 4);
    for (double d : {3.0, 1.0, 2.0}) scene.gaussians.push_back(at(scene, {1, 1}, 0.5, 1.0, d));
    CHECK(sort_for_compositing(scene) == std::vector<std::uint32_t>{1, 2, 0});

    Scene ties = single_modality_scene(4, 4);
    ties.gaussians.push_back(at(ties, {1, 1}, 0.5, 1.0, 5.0));
    ties.gaussians.push_back(at(ties, {1, 1}, 0.5, 1.0, 5.0));
    CHECK(sort_for_compositing(ties) == std::vector<std::uint32_t>{0, 1});

    Scene empty = single_modality_scene(4, 4);
    CHECK(sort_for_compositing(empty).empty());

    Scene bad = single_modality_scene(4, 4);
    bad.gaussians.push_back(at(bad, {1, 1}, 0.5, 1.0, std::nan("")));
    CHECK_THROWS_AS(sort_for_compositing(bad), std::invalid_argument);
}

TEST_CASE("single gaussian renders alpha at its own pixel center") {
    Scene scene = single_modality_scene(3, 3);
    scene.gaussians.push_back(at(scene, {1.5, 1.5}, 0.8, 1.0, 0.0));  // center of pixel (1,1)
    const auto rr = render_modality(scene, 0, RenderOptions::oracle());
    CHECK(rr.image.at(1, 1, 0) == doctest::Approx(0.8).epsilon(1e-12));
}

TEST_CASE("two coincident gaussians blend front to back") {
    Scene scene = single_modality_scene(3, 3);
    scene.gaussians.push_back(at(scene, {1.5, 1.5}, 0.5, 1.0, 0.0));  // front
    scene.gaussians.push_back(at(scene, {1.5, 1.5}, 0.5, 0.0, 1.0));  // back
    const auto rr = render_modality(scene, 0, RenderOptions::oracle());
    // 0.5*1.0 + 0.5*0.5*0.0
    CHECK(rr.image.at(1, 1, 0) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("fast tiled path equals the naive per-pixel compositor") {
    std::mt19937 rng(19);
    for (int trial = 0; trial < 40; ++trial) {
        oracle::SceneParams params;
        params.width = 16;
        params.height = 16;
        params.max_gaussians = 5;
        const Scene scene = oracle::random_scene(rng, params);
        for (std::size_t m = 0; m < scene.modalities.size(); ++m) {
            const auto fast = render_modality(scene, static_cast<int>(m), RenderOptions::oracle());
            const auto naive = oracle::naive_render(scene, static_cast<int>(m), 0.0);
            double max_err = 0.0;
            for (std::size_t i = 0; i < fast.image.data.size(); ++i)
                max_err = std::max(max_err, std::abs(fast.image.data[i] - naive.data[i]));
            CHECK(max_err <= 1e-6);
        }
    }
}

TEST_CASE("cutoff skips weak contributions identically to the oracle") {
    std::mt19937 rng(5);
    oracle::SceneParams params;
    params.width = 12;
    params.height = 12;
    const Scene scene = oracle::random_scene(rng, params);
    RenderOptions opts = RenderOptions::oracle();
    opts.cutoff = 1.0 / 255.0;
    const auto fast = render_modality(scene, 0, opts);
    const auto naive = oracle::naive_render(scene, 0, opts.cutoff);
    for (std::size_t i = 0; i < fast.image.data.size(); ++i)
        CHECK(fast.image.data[i] == doctest::Approx(naive.data[i]).epsilon(1e-9));
}

TEST_CASE("switch semantics: an off slot contributes nothing anywhere") {
    std::mt19937 rng(29);
    oracle::SceneParams params;
    params.allow_off_slots = false;
    Scene scene = oracle::random_scene(rng, params);
    const int victim = 0;

    const auto rgb_before = render_modality(scene, 0, RenderOptions::oracle());
    Scene toggled = scene;
    toggled.gaussians[victim].slots[1].on = false;

    Scene without = scene;
    without.gaussians.erase(without.gaussians.begin() + victim);

    const auto thermal_toggled = render_modality(toggled, 1, RenderOptions::oracle());
    const auto thermal_without = render_modality(without, 1, RenderOptions::oracle());
    CHECK(images_bitwise_equal(thermal_toggled.image, thermal_without.image));

    const auto rgb_after = render_modality(toggled, 0, RenderOptions::oracle());
    CHECK(images_bitwise_equal(rgb_before.image, rgb_after.image));
}

TEST_CASE("switch invariance is bitwise across other-modality perturbations") {
    std::mt19937 rng(31);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        Scene scene = oracle::random_scene(rng);
        const auto base = render_modality(scene, 0, RenderOptions::fast());
        Scene perturbed = scene;
        for (auto& g : perturbed.gaussians) {
            for (std::size_t m = 1; m < g.slots.size(); ++m) {
                g.slots[m].indicator_logit += unit(rng) * 4.0 - 2.0;
                if (unit(rng) < 0.5) g.slots[m].on = !g.slots[m].on;
                for (auto& f : g.slots[m].features) f = unit(rng);
            }
        }
        const auto after = render_modality(perturbed, 0, RenderOptions::fast());
        CHECK(images_bitwise_equal(base.image, after.image));
    }
}

TEST_CASE("render_all covers every declared modality; empty scene is zero") {
    Scene scene = single_modality_scene(5, 4);
    scene.modalities.push_back({1, "m1", 2, LossKind::FeatureL1, 1.0, 0.0});
    const auto all = render_all(scene, RenderOptions::fast());
    REQUIRE(all.size() == 2);
    for (const auto& rr : all)
        for (const double v : rr.image.data) CHECK(v == 0.0);
    CHECK_THROWS_AS(render_modality(scene, 7, RenderOptions::fast()), std::out_of_range);
}

TEST_CASE("shared opacity mode matches indicator mode when alphas agree") {
    std::mt19937 rng(41);
    oracle::SceneParams params;
    params.allow_off_slots = false;
    Scene scene = oracle::random_scene(rng, params);
    for (auto& g : scene.gaussians)
        for (auto& slot : g.slots) slot.indicator_logit = g.shared_opacity_logit;

    Scene shared = scene;
    shared.mode = SceneMode::SharedOpacity;
    for (std::size_t m = 0; m < scene.modalities.size(); ++m) {
        const auto a = render_modality(scene, static_cast<int>(m), RenderOptions::oracle());
        const auto b = render_modality(shared, static_cast<int>(m), RenderOptions::oracle());
        for (std::size_t i = 0; i < a.image.data.size(); ++i)
            CHECK(a.image.data[i] == doctest::Approx(b.image.data[i]).epsilon(1e-12));
    }
}

TEST_CASE("occlusion bound: saturated features never composite above one") {
    std::mt19937 rng(43);
    for (int trial = 0; trial < 20; ++trial) {
        Scene scene = oracle::random_scene(rng);
        for (auto& g : scene.gaussians)
            for (auto& slot : g.slots)
                std::fill(slot.features.begin(), slot.features.end(), 1.0);
        const auto rr = render_modality(scene, 0, RenderOptions::oracle());
        for (const double v : rr.image.data) CHECK(v <= 1.0 + 1e-12);
    }
}

TEST_CASE("storage order of distinct-depth gaussians does not matter") {
    std::mt19937 rng(47);
    Scene scene = oracle::random_scene(rng);
    for (std::size_t i = 0; i < scene.size(); ++i)
        scene.gaussians[i].depth = static_cast<double>(i) * 0.37 + 0.01;  // distinct
    const auto base = render_modality(scene, 0, RenderOptions::oracle());

    Scene shuffled = scene;
    std::shuffle(shuffled.gaussians.begin(), shuffled.gaussians.end(), rng);
    const auto after = render_modality(shuffled, 0, RenderOptions::oracle());
    for (std::size_t i = 0; i < base.image.data.size(); ++i)
        CHECK(std::abs(base.image.data[i] - after.image.data[i]) <= 1e-12);
}

TEST_CASE("output is identical for any worker count") {
    std::mt19937 rng(53);
    oracle::SceneParams params;
    params.width = 33;  // not a multiple of the tile size
    params.height = 18;
    Scene scene = oracle::random_scene(rng, params);
    RenderOptions opts = RenderOptions::fast();
    opts.workers = 1;
    const auto one = render_modality(scene, 0, opts);
    for (int workers : {2, 3, 7}) {
        opts.workers = workers;
        const auto many = render_modality(scene, 0, opts);
        CHECK(images_bitwise_equal(one.image, many.image));
        REQUIRE(one.trace.starts == many.trace.starts);
        REQUIRE(one.trace.counts == many.trace.counts);
        REQUIRE(one.trace.entries.size() == many.trace.entries.size());
        for (std::size_t i = 0; i < one.trace.entries.size(); ++i) {
            CHECK(one.trace.entries[i].gaussian == many.trace.entries[i].gaussian);
            CHECK(one.trace.entries[i].weight == many.trace.entries[i].weight);
        }
    }
}

TEST_CASE("trace weights are composite weights in [0,1] summing below one") {
    std::mt19937 rng(59);
    Scene scene = oracle::random_scene(rng);
    const auto rr = render_modality(scene, 0, RenderOptions::oracle());
    const std::size_t pixels = static_cast<std::size_t>(rr.image.width) * rr.image.height;
    REQUIRE(rr.trace.offsets.size() == pixels + 1);
    for (std::size_t p = 0; p < pixels; ++p) {
        double sum = 0.0;
        for (std::size_t e = rr.trace.begin(p); e < rr.trace.end(p); ++e) {
            CHECK(rr.trace.entries[e].weight >= 0.0);
            CHECK(rr.trace.entries[e].weight <= 1.0);
            sum += rr.trace.entries[e].weight;
        }
        CHECK(sum <= 1.0 + 1e-12);
    }
}

TEST_CASE("background composites through residual transmittance") {
    Scene scene = single_modality_scene(3, 3);
    scene.gaussians.push_back(at(scene, {1.5, 1.5}, 0.8, 1.0, 0.0));
    RenderOptions opts = RenderOptions::oracle();
    opts.background = 1.0;
    const auto rr = render_modality(scene, 0, opts);
    const double g11 = 0.8;  // alpha * g(center) = 0.8
    CHECK(rr.image.at(1, 1, 0) == doctest::Approx(g11 + (1.0 - g11) * 1.0).epsilon(1e-12));
}

TEST_CASE("flat binary image round trip is bit exact; png export guards channels") {
    std::mt19937 rng(61);
    std::uniform_real_distribution<double> unit(-2.0, 2.0);
    ModalityImage img(0, 7, 5, 3);
    for (auto& v : img.data) v = unit(rng);

    const auto dir = std::filesystem::temp_directory_path() / "mmsplat_img_test";
    std::filesystem::create_directories(dir);
    write_flat_image(dir / "img", img);
    const ModalityImage back = read_flat_image(dir / "img");
    CHECK(back.width == img.width);
    CHECK(back.height == img.height);
    CHECK(back.channels == img.channels);
    CHECK(back.data == img.data);

    write_png_rgb(dir / "img.png", img);
    std::ifstream png(dir / "img.png", std::ios::binary);
    unsigned char sig[8] = {};
    png.read(reinterpret_cast<char*>(sig), 8);
    CHECK(sig[1] == 'P');
    CHECK(sig[2] == 'N');
    CHECK(sig[3] == 'G');

    ModalityImage gray(0, 4, 4, 1);
    CHECK_THROWS_AS(write_png_rgb(dir / "bad.png", gray), std::invalid_argument);
    std::filesystem::remove_all(dir);
}
