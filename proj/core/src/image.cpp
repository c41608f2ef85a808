#include "mmsplat/image.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace mmsplat {

namespace {

using nlohmann::json;

void write_bytes(const std::filesystem::path& p, const void* data, std::size_t bytes) {
    std::ofstream f(p, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for writing: " + p.string());
    f.write(static_cast<const char*>(data), static_cast<std::streamsize>(bytes));
    if (!f) throw std::runtime_error("write failed: " + p.string());
}

std::vector<char> read_bytes(const std::filesystem::path& p, std::size_t expected) {
    std::ifstream f(p, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for reading: " + p.string());
    std::vector<char> buf(expected);
    f.read(buf.data(), static_cast<std::streamsize>(expected));
    if (static_cast<std::size_t>(f.gcount()) != expected)
        throw std::runtime_error("truncated file: " + p.string());
    return buf;
}

json read_meta(const std::filesystem::path& meta_path) {
    std::ifstream f(meta_path);
    if (!f) throw std::runtime_error("missing sidecar: " + meta_path.string());
    json j;
    f >> j;
    return j;
}

void write_meta(const std::filesystem::path& meta_path, const json& j) {
    std::ofstream f(meta_path);
    if (!f) throw std::runtime_error("cannot open for writing: " + meta_path.string());
    f << j.dump(2) << "\n";
}

}  // namespace

void write_flat_image(const std::filesystem::path& path_without_ext, const ModalityImage& img) {
    json meta = {{"width", img.width},
                 {"height", img.height},
                 {"channels", img.channels},
                 {"modality_id", img.modality_id},
                 {"dtype", "float64"},
                 {"layout", "row-major HWC"},
                 {"byte_order", "little-endian"}};
    write_meta(path_without_ext.string() + ".meta.json", meta);
    write_bytes(path_without_ext.string() + ".bin", img.data.data(),
                img.data.size() * sizeof(double));
}

ModalityImage read_flat_image(const std::filesystem::path& path_without_ext) {
    const json meta = read_meta(path_without_ext.string() + ".meta.json");
    if (meta.at("dtype") != "float64")
        throw std::runtime_error("expected float64 image: " + path_without_ext.string());
    ModalityImage img(meta.value("modality_id", -1), meta.at("width").get<int>(),
                      meta.at("height").get<int>(), meta.at("channels").get<int>());
    const auto buf =
        read_bytes(path_without_ext.string() + ".bin", img.data.size() * sizeof(double));
    std::memcpy(img.data.data(), buf.data(), buf.size());
    return img;
}

void write_mask(const std::filesystem::path& path_without_ext, const Mask& mask) {
    json meta = {{"width", mask.width},
                 {"height", mask.height},
                 {"channels", 1},
                 {"dtype", "uint8"},
                 {"layout", "row-major HW"},
                 {"byte_order", "little-endian"}};
    write_meta(path_without_ext.string() + ".meta.json", meta);
    write_bytes(path_without_ext.string() + ".bin", mask.data.data(), mask.data.size());
}

Mask read_mask(const std::filesystem::path& path_without_ext) {
    const json meta = read_meta(path_without_ext.string() + ".meta.json");
    if (meta.at("dtype") != "uint8")
        throw std::runtime_error("expected uint8 mask: " + path_without_ext.string());
    Mask mask(meta.at("width").get<int>(), meta.at("height").get<int>());
    const auto buf = read_bytes(path_without_ext.string() + ".bin", mask.data.size());
    std::memcpy(mask.data.data(), buf.data(), buf.size());
    return mask;
}

}  // namespace mmsplat
