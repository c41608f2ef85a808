#include "mmsplat/synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "mmsplat/rng.hpp"

namespace mmsplat {

namespace {

constexpr double kBackgroundTemp = 0.1;
constexpr double kMinLabelSeparation = 0.2;

struct ObjectShape {
    bool is_disk;
    double cx, cy;        // center, pixels
    double hx, hy;        // half extents (radius for disks)
    int label;
    double temperature;
    double brightness;
    double phase_x, phase_y;
};

bool inside(const ObjectShape& o, double x, double y) {
    const double dx = x - o.cx, dy = y - o.cy;
    if (o.is_disk) return dx * dx / (o.hx * o.hx) + dy * dy / (o.hy * o.hy) <= 1.0;
    return std::abs(dx) <= o.hx && std::abs(dy) <= o.hy;
}

// Symmetric-reflection index: ...2,1,0 | 0,1,2... on each border.
int reflect(int i, int n) {
    while (i < 0 || i >= n) {
        if (i < 0) i = -i - 1;
        if (i >= n) i = 2 * n - 1 - i;
    }
    return i;
}

void gaussian_blur_inplace(ModalityImage& img, double sigma) {
    if (sigma <= 0.0) return;
    const int radius = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
    double sum = 0.0;
    for (int t = -radius; t <= radius; ++t) {
        k[static_cast<std::size_t>(t + radius)] = std::exp(-0.5 * t * t / (sigma * sigma));
        sum += k[static_cast<std::size_t>(t + radius)];
    }
    for (double& v : k) v /= sum;

    const int W = img.width, H = img.height, C = img.channels;
    ModalityImage tmp = img;
    for (int r = 0; r < H; ++r)
        for (int c = 0; c < W; ++c)
            for (int ch = 0; ch < C; ++ch) {
                double acc = 0.0;
                for (int t = -radius; t <= radius; ++t)
                    acc += k[static_cast<std::size_t>(t + radius)] *
                           img.at(r, reflect(c + t, W), ch);
                tmp.at(r, c, ch) = acc;
            }
    for (int r = 0; r < H; ++r)
        for (int c = 0; c < W; ++c)
            for (int ch = 0; ch < C; ++ch) {
                double acc = 0.0;
                for (int t = -radius; t <= radius; ++t)
                    acc += k[static_cast<std::size_t>(t + radius)] *
                           tmp.at(reflect(r + t, H), c, ch);
                img.at(r, c, ch) = acc;
            }
}

}  // namespace

std::vector<LabelEntry> default_label_table(int count) {
    static const std::vector<LabelEntry> palette = {
        {"crimson", {0.85, 0.15, 0.15}}, {"leaf", {0.15, 0.80, 0.20}},
        {"cobalt", {0.15, 0.25, 0.85}},  {"amber", {0.90, 0.80, 0.15}},
        {"violet", {0.75, 0.20, 0.85}},  {"teal", {0.15, 0.80, 0.80}},
        {"rose", {0.95, 0.55, 0.60}},    {"slate", {0.45, 0.50, 0.60}},
    };
    if (count < 1 || count > static_cast<int>(palette.size()))
        throw std::invalid_argument("default_label_table supports 1..8 labels");
    return {palette.begin(), palette.begin() + count};
}

SyntheticTruth generate(const SyntheticSceneSpec& spec) {
    const int W = spec.width, H = spec.height;
    if (W < 4 || H < 4) throw std::invalid_argument("generate: viewport too small");

    std::vector<LabelEntry> labels =
        spec.label_table.empty() ? default_label_table(std::max(1, std::min(spec.object_count, 6)))
                                 : spec.label_table;
    for (std::size_t a = 0; a < labels.size(); ++a)
        for (std::size_t b = a + 1; b < labels.size(); ++b) {
            double d2 = 0.0;
            for (int ch = 0; ch < 3; ++ch) {
                const double d = labels[a].feature[ch] - labels[b].feature[ch];
                d2 += d * d;
            }
            if (std::sqrt(d2) < kMinLabelSeparation)
                throw std::invalid_argument("label features closer than the minimum separation");
        }

    const double min_dim = std::min(W, H);
    std::vector<ObjectShape> objects;
    objects.reserve(static_cast<std::size_t>(spec.object_count));
    for (int k = 0; k < spec.object_count; ++k) {
        const auto key = static_cast<std::uint64_t>(k);
        ObjectShape o;
        o.is_disk = rng::uniform(spec.seed, key, 0) < 0.5;
        o.cx = rng::uniform_range(0.18 * W, 0.82 * W, spec.seed, key, 1);
        o.cy = rng::uniform_range(0.18 * H, 0.82 * H, spec.seed, key, 2);
        o.hx = 0.5 * min_dim *
               rng::uniform_range(spec.min_object_frac, spec.max_object_frac, spec.seed, key, 3);
        o.hy = 0.5 * min_dim *
               rng::uniform_range(spec.min_object_frac, spec.max_object_frac, spec.seed, key, 4);
        o.label = k % static_cast<int>(labels.size());
        o.temperature = rng::uniform_range(0.35, 0.95, spec.seed, key, 5);
        o.brightness = rng::uniform_range(0.75, 1.0, spec.seed, key, 6);
        o.phase_x = rng::uniform_range(0.0, 1.0 / std::max(spec.rgb_texture_freq, 1e-6),
                                       spec.seed, key, 7);
        o.phase_y = rng::uniform_range(0.0, 1.0 / std::max(spec.rgb_texture_freq, 1e-6),
                                       spec.seed, key, 8);
        objects.push_back(o);
    }

    SyntheticTruth out;
    out.labels = labels;
    out.rgb = ModalityImage(0, W, H, 3);
    out.thermal = ModalityImage(1, W, H, 1);
    out.language = ModalityImage(2, W, H, 3);
    out.masks.assign(labels.size(), Mask(W, H));

    const double tau = 6.283185307179586476925286766559;
    for (int r = 0; r < H; ++r) {
        for (int c = 0; c < W; ++c) {
            const double x = c + 0.5, y = r + 0.5;
            // Topmost object wins; later objects draw over earlier ones.
            int top = -1;
            for (int k = static_cast<int>(objects.size()) - 1; k >= 0; --k)
                if (inside(objects[static_cast<std::size_t>(k)], x, y)) {
                    top = k;
                    break;
                }

            if (top < 0) {
                const double base = 0.12 + 0.08 * (x / W) + 0.05 * (y / H);
                out.rgb.at(r, c, 0) = base;
                out.rgb.at(r, c, 1) = base;
                out.rgb.at(r, c, 2) = base + 0.03;
                out.thermal.at(r, c, 0) = kBackgroundTemp;
                continue;
            }
            const ObjectShape& o = objects[static_cast<std::size_t>(top)];
            const LabelEntry& lab = labels[static_cast<std::size_t>(o.label)];
            const double tex = 0.75 + 0.25 * std::sin(tau * spec.rgb_texture_freq *
                                                      (x + o.phase_x)) *
                                          std::sin(tau * spec.rgb_texture_freq * (y + o.phase_y));
            for (int ch = 0; ch < 3; ++ch)
                out.rgb.at(r, c, ch) =
                    std::clamp(lab.feature[static_cast<std::size_t>(ch)] * o.brightness * tex,
                               0.0, 1.0);
            out.thermal.at(r, c, 0) = o.temperature;
            for (int ch = 0; ch < 3; ++ch)
                out.language.at(r, c, ch) = lab.feature[static_cast<std::size_t>(ch)];
            out.masks[static_cast<std::size_t>(o.label)].at(r, c) = 1;
        }
    }

    if (spec.noise_sigma > 0.0) {
        for (std::size_t i = 0; i < out.rgb.data.size(); ++i)
            out.rgb.data[i] = std::clamp(
                out.rgb.data[i] + spec.noise_sigma * rng::normal(spec.seed, 0xa0a0, i), 0.0, 1.0);
        for (std::size_t i = 0; i < out.thermal.data.size(); ++i)
            out.thermal.data[i] = std::clamp(
                out.thermal.data[i] + spec.noise_sigma * rng::normal(spec.seed, 0xb0b0, i), 0.0,
                1.0);
    }
    gaussian_blur_inplace(out.thermal, spec.thermal_blur_sigma);
    return out;
}

Dataset make_fixture_dataset(const SyntheticSceneSpec& spec) {
    SyntheticTruth truth = generate(spec);
    Dataset data;
    data.seed = spec.seed;
    data.width = spec.width;
    data.height = spec.height;
    data.modalities = {
        {0, "rgb", 3, LossKind::L1Dssim, 0.5, 0.0},
        {1, "thermal", 1, LossKind::L1DssimSmooth, 0.5, 0.6},
        {2, "language", 3, LossKind::FeatureL1, 0.2, 0.0},
    };
    data.truths.push_back(std::move(truth.rgb));
    data.truths.push_back(std::move(truth.thermal));
    data.truths.push_back(std::move(truth.language));
    data.labels = std::move(truth.labels);
    data.masks = std::move(truth.masks);
    return data;
}

Scene init_scene_from_truth(const Dataset& data, int n, std::uint64_t seed, SceneMode mode) {
    if (n < 1) throw std::invalid_argument("init_scene_from_truth: n must be >= 1");
    if (data.truths.empty()) throw std::invalid_argument("init_scene_from_truth: empty dataset");
    const int W = data.width, H = data.height;

    // Gradient magnitude of the first rgb-like modality (fallback: modality 0).
    std::size_t ref = 0;
    for (std::size_t m = 0; m < data.modalities.size(); ++m)
        if (data.modalities[m].loss_kind == LossKind::L1Dssim) {
            ref = m;
            break;
        }
    const ModalityImage& img = data.truths[ref];
    std::vector<double> grad(static_cast<std::size_t>(W) * H, 0.0);
    for (int r = 0; r < H; ++r)
        for (int c = 0; c < W; ++c) {
            double g = 0.0;
            for (int ch = 0; ch < img.channels; ++ch) {
                const double gx = img.at(r, std::min(c + 1, W - 1), ch) -
                                  img.at(r, std::max(c - 1, 0), ch);
                const double gy = img.at(std::min(r + 1, H - 1), c, ch) -
                                  img.at(std::max(r - 1, 0), c, ch);
                g += std::abs(gx) + std::abs(gy);
            }
            grad[static_cast<std::size_t>(r) * W + c] = g;
        }

    // Pixels by descending gradient; greedy selection with a spacing floor so
    // the picks cover the image instead of stacking on the strongest edge.
    std::vector<std::uint32_t> by_grad(grad.size());
    std::iota(by_grad.begin(), by_grad.end(), 0u);
    std::sort(by_grad.begin(), by_grad.end(), [&](std::uint32_t a, std::uint32_t b) {
        if (grad[a] != grad[b]) return grad[a] > grad[b];
        return a < b;
    });

    std::vector<Vec2> picks;
    picks.reserve(static_cast<std::size_t>(n));
    double spacing = std::sqrt(static_cast<double>(W) * H / (4.0 * n));
    while (static_cast<int>(picks.size()) < n && spacing >= 0.0) {
        for (const std::uint32_t p : by_grad) {
            if (static_cast<int>(picks.size()) >= n) break;
            const Vec2 cand{static_cast<double>(p % static_cast<std::uint32_t>(W)) + 0.5,
                            static_cast<double>(p / static_cast<std::uint32_t>(W)) + 0.5};
            bool ok = true;
            for (const Vec2& q : picks)
                if ((cand - q).norm() < spacing) {
                    ok = false;
                    break;
                }
            if (ok) picks.push_back(cand);
        }
        if (spacing == 0.0) break;
        spacing = spacing > 1.0 ? spacing * 0.5 : 0.0;  // relax until n picks fit
    }

    // Isotropic scale from the mean nearest-neighbor distance of the picks.
    double scale = std::max(W, H) / 8.0;
    if (picks.size() >= 2) {
        double acc = 0.0;
        for (std::size_t i = 0; i < picks.size(); ++i) {
            double best = std::numeric_limits<double>::infinity();
            for (std::size_t j = 0; j < picks.size(); ++j)
                if (j != i) best = std::min(best, (picks[i] - picks[j]).norm());
            acc += best;
        }
        scale = std::max(acc / static_cast<double>(picks.size()), 0.5);
    }

    Scene scene;
    scene.mode = mode;
    scene.modalities = data.modalities;
    scene.viewport.width = W;
    scene.viewport.height = H;  // identity map: world units are pixels

    const double init_logit = logit(0.1);
    for (std::size_t i = 0; i < picks.size(); ++i) {
        ModalGaussian g = make_gaussian(scene.modalities);
        g.mean = picks[i];
        g.log_scales = {std::log(scale), std::log(scale)};
        g.rotation = 0.0;
        g.depth = rng::uniform(seed, 0xd3f7ULL, i);
        g.shared_opacity_logit = init_logit;
        const int r = static_cast<int>(picks[i].y);
        const int c = static_cast<int>(picks[i].x);
        for (std::size_t m = 0; m < scene.modalities.size(); ++m) {
            ModalitySlot& slot = g.slots[m];
            slot.indicator_logit = init_logit;
            slot.on = true;
            const ModalityImage& truth = data.truths[m];
            for (int ch = 0; ch < truth.channels; ++ch)
                slot.features[static_cast<std::size_t>(ch)] = truth.at(r, c, ch);
        }
        scene.gaussians.push_back(std::move(g));
    }
    return scene;
}

}  // namespace mmsplat
