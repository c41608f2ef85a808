#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mmsplat/image.hpp"
#include "mmsplat/scene.hpp"

namespace mmsplat {

struct LabelEntry {
    std::string name;
    std::array<double, 3> feature{};
};

// One multimodal ground-truth set plus its modality roster, as written to and
// read from a dataset directory (manifest.json + flat images + masks).
struct Dataset {
    std::uint64_t seed = 0;
    int width = 0;
    int height = 0;
    std::vector<ModalityDescriptor> modalities;
    std::vector<ModalityImage> truths;  // ordered by modality id
    std::vector<LabelEntry> labels;     // language label feature table
    std::vector<Mask> masks;            // one per label, aligned with `labels`

    const ModalityImage& truth_for(int modality_id) const;
    std::vector<std::vector<double>> label_feature_table() const;
};

void write_dataset(const std::filesystem::path& dir, const Dataset& data);
Dataset read_dataset(const std::filesystem::path& dir);

}  // namespace mmsplat
