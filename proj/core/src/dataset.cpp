#include "mmsplat/dataset.hpp"

#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace mmsplat {

using nlohmann::json;

const ModalityImage& Dataset::truth_for(int modality_id) const {
    if (modality_id < 0 || modality_id >= static_cast<int>(truths.size()))
        throw std::out_of_range("dataset has no modality " + std::to_string(modality_id));
    return truths[static_cast<std::size_t>(modality_id)];
}

std::vector<std::vector<double>> Dataset::label_feature_table() const {
    std::vector<std::vector<double>> table;
    table.reserve(labels.size());
    for (const auto& l : labels)
        table.push_back({l.feature[0], l.feature[1], l.feature[2]});
    return table;
}

void write_dataset(const std::filesystem::path& dir, const Dataset& data) {
    std::filesystem::create_directories(dir / "masks");

    json manifest;
    manifest["version"] = 1;
    manifest["seed"] = data.seed;
    manifest["width"] = data.width;
    manifest["height"] = data.height;

    json mods = json::array();
    for (std::size_t m = 0; m < data.modalities.size(); ++m) {
        const auto& d = data.modalities[m];
        mods.push_back({{"id", d.id},
                        {"name", d.name},
                        {"feature_dim", d.feature_dim},
                        {"loss_kind", loss_kind_name(d.loss_kind)},
                        {"loss_weight", d.loss_weight},
                        {"smooth_weight", d.smooth_weight},
                        {"file", d.name}});
        write_flat_image(dir / d.name, data.truths.at(m));
        if (data.truths.at(m).channels == 3)
            write_png_rgb(dir / (d.name + ".png"), data.truths.at(m));
    }
    manifest["modalities"] = mods;

    json labs = json::array();
    for (std::size_t l = 0; l < data.labels.size(); ++l) {
        const auto& lab = data.labels[l];
        const std::string file = "masks/" + lab.name;
        labs.push_back({{"name", lab.name},
                        {"feature", {lab.feature[0], lab.feature[1], lab.feature[2]}},
                        {"mask_file", file}});
        write_mask(dir / file, data.masks.at(l));
    }
    manifest["labels"] = labs;

    std::ofstream f(dir / "manifest.json");
    if (!f) throw std::runtime_error("cannot write manifest in " + dir.string());
    f << manifest.dump(2) << "\n";
}

Dataset read_dataset(const std::filesystem::path& dir) {
    std::ifstream f(dir / "manifest.json");
    if (!f) throw std::runtime_error("missing dataset manifest: " + (dir / "manifest.json").string());
    json manifest;
    f >> manifest;

    Dataset data;
    data.seed = manifest.value("seed", std::uint64_t{0});
    data.width = manifest.at("width").get<int>();
    data.height = manifest.at("height").get<int>();

    for (const auto& j : manifest.at("modalities")) {
        ModalityDescriptor d;
        d.id = j.at("id").get<int>();
        d.name = j.at("name").get<std::string>();
        d.feature_dim = j.at("feature_dim").get<int>();
        d.loss_kind = loss_kind_from_name(j.at("loss_kind").get<std::string>());
        d.loss_weight = j.at("loss_weight").get<double>();
        d.smooth_weight = j.at("smooth_weight").get<double>();
        if (d.id != static_cast<int>(data.modalities.size()))
            throw std::runtime_error("dataset manifest: modality ids must be dense and ordered");
        data.modalities.push_back(d);
        ModalityImage img = read_flat_image(dir / j.at("file").get<std::string>());
        if (img.width != data.width || img.height != data.height ||
            img.channels != d.feature_dim)
            throw std::runtime_error("dataset image shape mismatch for modality " + d.name);
        img.modality_id = d.id;
        data.truths.push_back(std::move(img));
    }

    if (manifest.contains("labels")) {
        for (const auto& j : manifest.at("labels")) {
            LabelEntry lab;
            lab.name = j.at("name").get<std::string>();
            const auto& feat = j.at("feature");
            for (int ch = 0; ch < 3; ++ch)
                lab.feature[static_cast<std::size_t>(ch)] =
                    feat.at(static_cast<std::size_t>(ch)).get<double>();
            data.labels.push_back(lab);
            data.masks.push_back(read_mask(dir / j.at("mask_file").get<std::string>()));
        }
    }
    return data;
}

}  // namespace mmsplat
