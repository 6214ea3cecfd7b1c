#pragma once

// Shared fixtures and independent reference implementations for tests.

#include <contrack/dataio.hpp>
#include <contrack/geometry.hpp>
#include <contrack/network.hpp>
#include <contrack/rng.hpp>
#include <contrack/types.hpp>

#include <cmath>
#include <limits>
#include <numbers>
#include <set>
#include <utility>
#include <vector>

namespace contrack::testing {

inline Mask disk_mask(int size, Vec2 center, double radius) {
    Mask m(size, size);
    for (int r = 0; r < size; ++r)
        for (int c = 0; c < size; ++c)
            if (std::hypot(c - center.x, r - center.y) <= radius) m.at(r, c) = 1;
    return m;
}

inline Mask rect_mask(int height, int width, int x0, int y0, int x1, int y1) {
    Mask m(height, width);
    for (int r = y0; r <= y1; ++r)
        for (int c = x0; c <= x1; ++c) m.at(r, c) = 1;
    return m;
}

/// Foreground pixels with a 4-neighbor background pixel inside the image,
/// minus the image border.
inline std::set<std::pair<int, int>> enumerate_boundary(const Mask& m) {
    std::set<std::pair<int, int>> out;
    for (int r = 0; r < m.height; ++r)
        for (int c = 0; c < m.width; ++c) {
            if (!m.at(r, c)) continue;
            if (r == 0 || c == 0 || r == m.height - 1 || c == m.width - 1) continue;
            bool edge = !m.at(r - 1, c) || !m.at(r + 1, c) || !m.at(r, c - 1) || !m.at(r, c + 1);
            if (edge) out.insert({c, r});
        }
    return out;
}

inline std::size_t brute_nearest(const std::vector<Vec2>& pts, Vec2 q) {
    std::size_t best = 0;
    double best_d2 = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < pts.size(); ++i) {
        double dx = q.x - pts[i].x, dy = q.y - pts[i].y;
        double d2 = dx * dx + dy * dy;
        if (d2 < best_d2) {
            best_d2 = d2;
            best = i;
        }
    }
    return best;
}

inline Contour random_contour(Rng& rng, std::size_t n, double extent) {
    Contour c;
    for (std::size_t i = 0; i < n; ++i) c.points.push_back({rng.uniform(0, extent), rng.uniform(0, extent)});
    return c;
}

/// Even-odd point in polygon test, counting points on an edge as inside.
inline bool inside_or_on(const std::vector<Vec2>& poly, Vec2 p) {
    bool in = false;
    const std::size_t n = poly.size();
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
        Vec2 a = poly[i], b = poly[j];
        Vec2 ab = b - a, ap = p - a;
        if (std::fabs(cross(ab, ap)) < 1e-12 && dot(ap, p - b) <= 0) return true;
        if ((a.y > p.y) != (b.y > p.y) && p.x < (b.x - a.x) * (p.y - a.y) / (b.y - a.y) + a.x) in = !in;
    }
    return in;
}

inline Mask render_polygon(const std::vector<Vec2>& poly, int height, int width) {
    Mask m(height, width);
    for (int r = 0; r < height; ++r)
        for (int c = 0; c < width; ++c)
            if (inside_or_on(poly, {static_cast<double>(c), static_cast<double>(r)})) m.at(r, c) = 1;
    return m;
}

inline double angle_between(Vec2 a, Vec2 b) {
    double c = dot(a, b) / (norm(a) * norm(b));
    return std::acos(std::clamp(c, -1.0, 1.0)) * 180.0 / std::numbers::pi;
}

/// About 1.1k parameters on 16x16 images.
inline TrackerConfig tiny_config(bool zero_init_head = false) {
    TrackerConfig cfg;
    cfg.encoder.stage_channels = {2, 4};
    cfg.encoder.fpn_channels = 4;
    cfg.encoder.image_size = 16;
    cfg.encoder.seed = 42;
    cfg.pos_dim = 4;
    cfg.model_dim = 8;
    cfg.heads = 2;
    cfg.head_hidden = 8;
    cfg.zero_init_head = zero_init_head;
    return cfg;
}

inline Image random_image(int size, Rng& rng) {
    Image img(size, size);
    for (double& v : img.data) v = rng.uniform();
    return img;
}

/// Smooth image so bilinear sampling is well behaved under small offsets.
inline Image smooth_image(int size, double phase) {
    Image img(size, size);
    for (int r = 0; r < size; ++r)
        for (int c = 0; c < size; ++c)
            img.at(r, c) = 0.5 + 0.25 * std::sin(0.37 * c + phase) * std::cos(0.29 * r - phase);
    return img;
}

/// Points on an arc of a circle, ordered by angle.
inline Contour arc_contour(Vec2 center, double radius, double a0, double a1, std::size_t n, int frame = 0) {
    Contour c;
    c.frame = frame;
    for (std::size_t k = 0; k < n; ++k) {
        double a = a0 + (a1 - a0) * static_cast<double>(k) / static_cast<double>(n - 1);
        c.points.push_back(center + radius * Vec2{std::cos(a), std::sin(a)});
    }
    return c;
}

/// Small pulsing, drifting blob for pipeline tests.
inline SyntheticSpec small_blob_spec(int size = 32, int frames = 4) {
    SyntheticSpec s;
    s.image_size = size;
    s.frame_count = frames;
    s.base_radius = size / 4.0;
    s.pulse_amplitude = size / 32.0;
    s.pulse_period = 6.0;
    s.lobes = {{3, size / 40.0, size / 64.0, 5.0, 0.0, 0.2}};
    s.drift = {0.25, 0.0};
    return s;
}

}  // namespace contrack::testing
