#pragma once

#include <cstdint>
#include <vector>

#include "mmsplat/dataset.hpp"
#include "mmsplat/scene.hpp"

namespace mmsplat {

// Deterministic synthetic multimodal scene: fine RGB texture, a coarse
// blurred thermal field, and piecewise-constant language features, so the
// three modalities favor different gaussian granularities.
struct SyntheticSceneSpec {
    std::uint64_t seed = 1;
    int width = 128;
    int height = 128;
    int object_count = 6;
    double min_object_frac = 0.12;  // object half-extent, fraction of min(W,H)
    double max_object_frac = 0.30;
    double rgb_texture_freq = 0.15;   // cycles per pixel
    double thermal_blur_sigma = 3.0;  // pixels; 0 keeps the sharp field
    double noise_sigma = 0.0;         // additive on rgb (post) and thermal (pre-blur)
    std::vector<LabelEntry> label_table;  // empty -> default palette
};

std::vector<LabelEntry> default_label_table(int count);

struct SyntheticTruth {
    ModalityImage rgb;       // 3 channels
    ModalityImage thermal;   // 1 channel
    ModalityImage language;  // 3 channels, one feature per label + zero background
    std::vector<LabelEntry> labels;
    std::vector<Mask> masks;  // per label, exactly the language regions
};

SyntheticTruth generate(const SyntheticSceneSpec& spec);

// Truth plus the three-modality roster with the standard loss recipe
// (rgb 0.5 l1+dssim, thermal 0.5 with smoothness 0.6, language 0.2 l1).
Dataset make_fixture_dataset(const SyntheticSceneSpec& spec);

// Seeds a scene from the ground truth: means at high-gradient RGB locations
// (strict argmax for n=1), isotropic scale from the mean nearest-neighbor
// distance, indicators at the 0.1 pre-activation point, features copied from
// the truth pixel under each mean.
Scene init_scene_from_truth(const Dataset& data, int n, std::uint64_t seed,
                            SceneMode mode = SceneMode::PerModalityIndicator);

}  // namespace mmsplat
