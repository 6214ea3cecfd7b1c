#pragma once

#include <contrack/types.hpp>

#include <cstdint>
#include <filesystem>
#include <vector>

namespace contrack {

/// 8-bit interleaved RGB raster used for visualizations.
struct RgbImage {
    int height = 0;
    int width = 0;
    std::vector<std::uint8_t> data;  // height * width * 3

    RgbImage() = default;
    RgbImage(int h, int w) : height(h), width(w), data(static_cast<std::size_t>(h) * w * 3, 0) {}

    void set(int row, int col, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
        if (row < 0 || col < 0 || row >= height || col >= width) return;
        std::size_t k = (static_cast<std::size_t>(row) * width + col) * 3;
        data[k] = r;
        data[k + 1] = g;
        data[k + 2] = b;
    }
};

/// Reads any PNG as grayscale with intensities scaled to [0, 1].
Image read_png_gray(const std::filesystem::path& path);
/// Writes intensities clamped to [0, 1] as 8-bit grayscale.
void write_png_gray(const std::filesystem::path& path, const Image& image);

/// Nonzero pixels are foreground.
Mask read_png_mask(const std::filesystem::path& path);
/// Foreground written as 255, background as 0.
void write_png_mask(const std::filesystem::path& path, const Mask& mask);

void write_png_rgb(const std::filesystem::path& path, const RgbImage& image);

/// Encodes an 8-bit grayscale PNG into memory (used by the HTTP service).
std::vector<std::uint8_t> encode_png_gray(const Image& image);

}  // namespace contrack
