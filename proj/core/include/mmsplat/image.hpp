#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace mmsplat {

// Dense H x W x C raster of one modality, row-major, doubles.
struct ModalityImage {
    int modality_id = -1;
    int width = 0;
    int height = 0;
    int channels = 1;
    std::vector<double> data;  // size = height * width * channels

    ModalityImage() = default;
    ModalityImage(int mod_id, int w, int h, int c)
        : modality_id(mod_id), width(w), height(h), channels(c),
          data(static_cast<std::size_t>(w) * h * c, 0.0) {}

    std::size_t index(int row, int col, int ch = 0) const {
        return (static_cast<std::size_t>(row) * width + col) * channels + ch;
    }
    double& at(int row, int col, int ch = 0) { return data[index(row, col, ch)]; }
    const double& at(int row, int col, int ch = 0) const { return data[index(row, col, ch)]; }
    std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }

    bool same_shape(const ModalityImage& o) const {
        return width == o.width && height == o.height && channels == o.channels;
    }
};

// Flat binary image format: <path>.bin holds raw little-endian float64 in
// row-major H x W x C order; <path>.meta.json is the sidecar header with
// width/height/channels/dtype. See docs/formats.md for the byte-exact layout.
void write_flat_image(const std::filesystem::path& path_without_ext, const ModalityImage& img);
ModalityImage read_flat_image(const std::filesystem::path& path_without_ext);

// Boolean raster stored as uint8 0/1 in the same flat layout (dtype "uint8").
struct Mask {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> data;

    Mask() = default;
    Mask(int w, int h) : width(w), height(h), data(static_cast<std::size_t>(w) * h, 0) {}
    std::uint8_t& at(int row, int col) { return data[static_cast<std::size_t>(row) * width + col]; }
    std::uint8_t at(int row, int col) const {
        return data[static_cast<std::size_t>(row) * width + col];
    }
};

void write_mask(const std::filesystem::path& path_without_ext, const Mask& mask);
Mask read_mask(const std::filesystem::path& path_without_ext);

// 8-bit PNG export for 3-channel images: value = round(clamp(v,0,1)*255).
// Throws unless channels == 3.
void write_png_rgb(const std::filesystem::path& path, const ModalityImage& img);

}  // namespace mmsplat
