#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

namespace contrack {

/// 2D point or vector in pixel coordinates (x = column, y = row).
struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
    friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
    friend Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
    friend Vec2 operator*(Vec2 a, double s) { return {s * a.x, s * a.y}; }
    friend bool operator==(Vec2 a, Vec2 b) = default;
};

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }
inline double distance(Vec2 a, Vec2 b) { return norm(a - b); }

/// Binary segmentation mask, row-major, values 0 or 1.
struct Mask {
    int height = 0;
    int width = 0;
    std::vector<std::uint8_t> pixels;

    Mask() = default;
    Mask(int h, int w) : height(h), width(w), pixels(static_cast<std::size_t>(h) * w, 0) {}

    std::uint8_t at(int row, int col) const { return pixels[static_cast<std::size_t>(row) * width + col]; }
    std::uint8_t& at(int row, int col) { return pixels[static_cast<std::size_t>(row) * width + col]; }
    bool inside(int row, int col) const { return row >= 0 && col >= 0 && row < height && col < width; }
    std::size_t count() const;
    friend bool operator==(const Mask&, const Mask&) = default;
};

/// Single-channel intensity image, row-major, nominally in [0, 1].
struct Image {
    int height = 0;
    int width = 0;
    std::vector<double> data;

    Image() = default;
    Image(int h, int w, double fill = 0.0) : height(h), width(w), data(static_cast<std::size_t>(h) * w, fill) {}

    double at(int row, int col) const { return data[static_cast<std::size_t>(row) * width + col]; }
    double& at(int row, int col) { return data[static_cast<std::size_t>(row) * width + col]; }
    friend bool operator==(const Image&, const Image&) = default;
};

/// Ordered open polyline of contour points for one frame.
struct Contour {
    int frame = 0;
    std::vector<Vec2> points;

    std::size_t size() const { return points.size(); }
    bool empty() const { return points.empty(); }
    friend bool operator==(const Contour&, const Contour&) = default;
};

/// Channel-major view over a C x H x W grid of doubles.
struct GridView {
    int channels = 1;
    int height = 0;
    int width = 0;
    std::span<const double> data;

    double at(int c, int row, int col) const {
        return data[(static_cast<std::size_t>(c) * height + row) * width + col];
    }
};

inline GridView view(const Image& img) { return {1, img.height, img.width, img.data}; }

}  // namespace contrack
