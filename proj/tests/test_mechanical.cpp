#include "fixtures.hpp"

#include <contrack/errors.hpp>
#include <contrack/mechanical.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

namespace contrack {
namespace {

using namespace contrack::testing;

OffsetField offsets_of(std::vector<Vec2> v) {
    OffsetField f;
    f.offsets = std::move(v);
    return f;
}

Contour line(double y, double x0, std::size_t n, double step = 1.0) {
    Contour c;
    for (std::size_t i = 0; i < n; ++i) c.points.push_back({x0 + step * i, y});
    return c;
}

// Fraction of interior source points whose matched target point lies within
// max_deg of the source point's polar angle around center.
double radial_hit_rate(const Contour& from, const Contour& to, const CorrespondenceMap& m, Vec2 center,
                       double max_deg) {
    std::size_t good = 0, total = 0;
    for (std::size_t i = 1; i + 1 < from.size(); ++i) {
        ++total;
        Vec2 a = from.points[i] - center, b = to.points[m.match[i]] - center;
        if (angle_between(a, b) < max_deg) ++good;
    }
    return static_cast<double>(good) / static_cast<double>(total);
}

TEST(MechResiduals, ZeroCases) {
    Contour c = arc_contour({30, 30}, 10, 0.3, 2.5, 15);
    NormalField n = compute_normals_unoriented(c);
    MechEnergyConfig cfg;
    auto r = mech_residuals(offsets_of(std::vector<Vec2>(15)), c, c, n, cfg);
    for (double v : r.torsion) EXPECT_EQ(v, 0.0);
    for (double v : r.attachment) EXPECT_EQ(v, 0.0);
    for (double v : r.spring) EXPECT_NEAR(v, 0.0, 1e-12);  // arc spacing carries rounding

    // straight line moved along its normal onto an equally spaced copy
    Contour a = line(5, 2, 8), b = line(9, 2, 8);
    NormalField na = compute_normals_unoriented(a);
    auto rb = mech_residuals(offsets_of(std::vector<Vec2>(8, Vec2{0, 4})), a, b, na, cfg);
    for (double v : rb.all()) EXPECT_EQ(v, 0.0);
    EXPECT_EQ(rb.torsion.size(), 6u);
    EXPECT_EQ(rb.spring.size(), 7u);
    EXPECT_EQ(rb.attachment.size(), 8u);
}

TEST(MechResiduals, HandBuiltFivePointCase) {
    Contour a;
    a.points = {{0, 0}, {1, 0}, {2, 0}, {3, 0}, {4, 0}};
    Contour b;
    b.points = {{0, 2}, {4, 2}};
    NormalField n = compute_normals_unoriented(a);
    std::vector<Vec2> o{{0, 1}, {1, 1}, {0, 2}, {-1, 3}, {0.5, 0}};
    MechEnergyConfig cfg;
    cfg.spring_weight = 4.0;
    auto r = mech_residuals(offsets_of(o), a, b, n, cfg);

    // independent per-term evaluation
    std::vector<Vec2> q;
    for (std::size_t i = 0; i < 5; ++i) q.push_back(a.points[i] + o[i]);
    for (std::size_t i = 1; i <= 3; ++i) {
        double s = (n[i].x * o[i].y - n[i].y * o[i].x) / std::hypot(o[i].x, o[i].y);
        EXPECT_NEAR(r.torsion[i - 1], s, 1e-15);
    }
    EXPECT_NEAR(std::fabs(r.torsion[0]), std::sin(std::numbers::pi / 4), 1e-15);
    double d[4], mean = 0;
    for (int i = 0; i < 4; ++i) mean += d[i] = std::hypot(q[i + 1].x - q[i].x, q[i + 1].y - q[i].y);
    mean /= 4;
    for (int i = 0; i < 4; ++i) EXPECT_NEAR(r.spring[i], 2.0 * (d[i] - mean), 1e-14);
    for (int i = 0; i < 5; ++i) {
        double x = std::clamp(q[i].x, 0.0, 4.0);
        EXPECT_NEAR(r.attachment[i], std::hypot(q[i].x - x, q[i].y - 2.0), 1e-14);
    }
}

TEST(MechResiduals, ZeroOffsetHasZeroTorsion) {
    Contour a = line(5, 2, 6);
    NormalField n = compute_normals_unoriented(a);
    std::vector<Vec2> o(6, Vec2{0, 0});
    o[2] = {1e-12, 0};
    auto r = mech_residuals(offsets_of(o), a, a, n, MechEnergyConfig{});
    for (double v : r.torsion) EXPECT_EQ(v, 0.0);
}

TEST(PolylineProjection, SegmentsAndVertices) {
    Contour c;
    c.points = {{0, 0}, {10, 0}, {10, 10}};
    EXPECT_EQ(nearest_on_polyline(c, {4, 3}), (Vec2{4, 0}));
    EXPECT_EQ(nearest_on_polyline(c, {13, 5}), (Vec2{10, 5}));
    EXPECT_EQ(nearest_on_polyline(c, {-3, -4}), (Vec2{0, 0}));
}

TEST(SolveMechanical, IdenticalContours) {
    Contour c = arc_contour({30, 30}, 10, 0.3, 2.5, 20);
    auto sol = solve_mechanical(c, c);
    EXPECT_NEAR(sol.final_energy, 0.0, 1e-24);
    for (std::size_t i = 0; i < c.size(); ++i) {
        EXPECT_EQ(sol.correspondence.match[i], i);
        EXPECT_LT(norm(sol.offsets.offsets[i]), 1e-9);
    }
}

TEST(SolveMechanical, TranslatedSegmentMovesAlongNormal) {
    Contour a = line(10, 5, 21), b = line(13, 5, 21);
    auto sol = solve_mechanical(a, b);
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_NEAR(sol.offsets.offsets[i].x, 0.0, 1e-4);
        EXPECT_NEAR(sol.offsets.offsets[i].y, 3.0, 1e-4);
        EXPECT_EQ(sol.correspondence.match[i], i);
    }
    auto r = mech_residuals(sol.offsets, a, b, compute_normals_unoriented(a), MechEnergyConfig{});
    for (double v : r.spring) EXPECT_NEAR(v, 0.0, 1e-6);
}

TEST(SolveMechanical, NoSpringDecouplesToNormalProjection) {
    // target line is denser and shifted sideways; without the spring each point
    // lands straight across
    Contour a = line(10, 5, 15, 2.0), b = line(14, 0.5, 90, 0.5);
    MechEnergyConfig cfg;
    cfg.spring_weight = 0.0;
    auto sol = solve_mechanical(a, b, cfg);
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_NEAR(sol.offsets.offsets[i].x, 0.0, 1e-4);
        EXPECT_NEAR(sol.offsets.offsets[i].y, 4.0, 1e-4);
        EXPECT_EQ(b.points[sol.correspondence.match[i]], (a.points[i] + Vec2{0, 4}));
    }
}

TEST(SolveMechanical, AnalyticConcentricArcs) {
    const Vec2 center{64, 64};
    Contour a = arc_contour(center, 20, 0.2, 2.9, 57), b = arc_contour(center, 24, 0.2, 2.9, 68);
    auto sol = solve_mechanical(a, b);
    EXPECT_GE(radial_hit_rate(a, b, sol.correspondence, center, 3.0), 0.9);
    for (std::size_t k = 1; k < sol.energy_trace.size(); ++k) EXPECT_LE(sol.energy_trace[k], sol.energy_trace[k - 1]);
}

TEST(SolveMechanical, MaskConcentricArcs) {
    // disks cut by the image border so both contours are open arcs
    const Vec2 center{40, 2};
    Contour a = extract_contour(disk_mask(96, center, 20)).contour;
    Contour b = extract_contour(disk_mask(96, center, 24)).contour;
    auto sol = solve_mechanical(a, b);
    double rate = radial_hit_rate(a, b, sol.correspondence, center, 3.0);
    EXPECT_GE(rate, 0.9);
    for (std::size_t k = 1; k < sol.energy_trace.size(); ++k) EXPECT_LE(sol.energy_trace[k], sol.energy_trace[k - 1]);
    EXPECT_GT(sol.iterations_used, 0);
}

TEST(SolveMechanical, TranslationInvariant) {
    Contour a = arc_contour({30, 30}, 10, 0.3, 2.5, 25), b = arc_contour({31, 30.5}, 12, 0.2, 2.6, 31);
    auto s1 = solve_mechanical(a, b);
    for (auto& p : a.points) p = p + Vec2{17, -5};
    for (auto& p : b.points) p = p + Vec2{17, -5};
    auto s2 = solve_mechanical(a, b);
    EXPECT_EQ(s1.correspondence.match, s2.correspondence.match);
}

TEST(SolveMechanical, RejectsBadInput) {
    Contour tiny;
    tiny.points = {{0, 0}, {1, 0}};
    Contour ok = line(3, 0, 5);
    EXPECT_THROW(solve_mechanical(tiny, ok), Error);
    MechEnergyConfig cfg;
    cfg.max_iterations = 0;
    EXPECT_THROW(solve_mechanical(ok, ok, cfg), Error);
    cfg = {};
    cfg.spring_weight = -1;
    EXPECT_THROW(validate(cfg), Error);
}

}  // namespace
}  // namespace contrack
