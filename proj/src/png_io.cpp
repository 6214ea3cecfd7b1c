#include <contrack/errors.hpp>
#include <contrack/png_io.hpp>

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstring>

namespace contrack {

namespace {

std::vector<std::uint8_t> read_gray8(const std::filesystem::path& path, int& height, int& width) {
    png_image img;
    std::memset(&img, 0, sizeof(img));
    img.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&img, path.string().c_str()))
        throw Error(ErrorKind::IoError, "cannot read PNG " + path.string() + ": " + img.message);
    img.format = PNG_FORMAT_GRAY;
    std::vector<std::uint8_t> buffer(PNG_IMAGE_SIZE(img));
    if (!png_image_finish_read(&img, nullptr, buffer.data(), 0, nullptr)) {
        png_image_free(&img);
        throw Error(ErrorKind::IoError, "cannot decode PNG " + path.string() + ": " + img.message);
    }
    height = static_cast<int>(img.height);
    width = static_cast<int>(img.width);
    return buffer;
}

void write_raw(const std::filesystem::path& path, int height, int width, png_uint_32 format, const std::uint8_t* data) {
    png_image img;
    std::memset(&img, 0, sizeof(img));
    img.version = PNG_IMAGE_VERSION;
    img.width = static_cast<png_uint_32>(width);
    img.height = static_cast<png_uint_32>(height);
    img.format = format;
    if (!png_image_write_to_file(&img, path.string().c_str(), 0, data, 0, nullptr))
        throw Error(ErrorKind::IoError, "cannot write PNG " + path.string() + ": " + img.message);
}

std::vector<std::uint8_t> quantize(const Image& image) {
    std::vector<std::uint8_t> out(image.data.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        double v = std::clamp(image.data[i], 0.0, 1.0);
        out[i] = static_cast<std::uint8_t>(std::lround(v * 255.0));
    }
    return out;
}

}  // namespace

Image read_png_gray(const std::filesystem::path& path) {
    int h = 0, w = 0;
    auto raw = read_gray8(path, h, w);
    Image out(h, w);
    for (std::size_t i = 0; i < raw.size(); ++i) out.data[i] = raw[i] / 255.0;
    return out;
}

void write_png_gray(const std::filesystem::path& path, const Image& image) {
    auto raw = quantize(image);
    write_raw(path, image.height, image.width, PNG_FORMAT_GRAY, raw.data());
}

Mask read_png_mask(const std::filesystem::path& path) {
    int h = 0, w = 0;
    auto raw = read_gray8(path, h, w);
    Mask out(h, w);
    for (std::size_t i = 0; i < raw.size(); ++i) out.pixels[i] = raw[i] != 0 ? 1 : 0;
    return out;
}

void write_png_mask(const std::filesystem::path& path, const Mask& mask) {
    std::vector<std::uint8_t> raw(mask.pixels.size());
    for (std::size_t i = 0; i < raw.size(); ++i) raw[i] = mask.pixels[i] ? 255 : 0;
    write_raw(path, mask.height, mask.width, PNG_FORMAT_GRAY, raw.data());
}

void write_png_rgb(const std::filesystem::path& path, const RgbImage& image) {
    write_raw(path, image.height, image.width, PNG_FORMAT_RGB, image.data.data());
}

std::vector<std::uint8_t> encode_png_gray(const Image& image) {
    auto raw = quantize(image);
    png_image img;
    std::memset(&img, 0, sizeof(img));
    img.version = PNG_IMAGE_VERSION;
    img.width = static_cast<png_uint_32>(image.width);
    img.height = static_cast<png_uint_32>(image.height);
    img.format = PNG_FORMAT_GRAY;
    png_alloc_size_t size = 0;
    if (!png_image_write_to_memory(&img, nullptr, &size, 0, raw.data(), 0, nullptr))
        throw Error(ErrorKind::IoError, std::string("cannot size PNG buffer: ") + img.message);
    std::vector<std::uint8_t> out(size);
    if (!png_image_write_to_memory(&img, out.data(), &size, 0, raw.data(), 0, nullptr))
        throw Error(ErrorKind::IoError, std::string("cannot encode PNG: ") + img.message);
    out.resize(size);
    return out;
}

}  // namespace contrack
