#include "fixtures.hpp"

#include <contrack/errors.hpp>
#include <contrack/geometry.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

namespace contrack {
namespace {

using namespace contrack::testing;

bool eight_adjacent(Vec2 a, Vec2 b) {
    return std::fabs(a.x - b.x) <= 1.0 && std::fabs(a.y - b.y) <= 1.0 && !(a == b);
}

TEST(ExtractContour, HalfPlaneDropsBorderRows) {
    Mask m = rect_mask(8, 8, 0, 0, 3, 7);
    auto ex = extract_contour(m);
    ASSERT_EQ(ex.contour.size(), 6u);
    for (int y = 1; y <= 6; ++y) EXPECT_EQ(ex.contour.points[y - 1], (Vec2{3.0, static_cast<double>(y)}));
    EXPECT_FALSE(ex.fragmented);

    std::set<std::pair<int, int>> got;
    for (auto p : ex.contour.points) got.insert({static_cast<int>(p.x), static_cast<int>(p.y)});
    EXPECT_EQ(got, enumerate_boundary(m));
}

TEST(ExtractContour, EmptyMaskThrows) {
    Mask m(8, 8);
    try {
        extract_contour(m);
        FAIL() << "expected EmptyMask";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::EmptyMask);
    }
}

TEST(ExtractContour, CenteredSquareIsOneClosedChain) {
    Mask m = rect_mask(12, 12, 4, 4, 7, 7);
    auto ex = extract_contour(m);
    ASSERT_EQ(ex.contour.size(), 12u);
    EXPECT_EQ(ex.contour.points.front(), (Vec2{4, 4}));
    std::set<std::pair<int, int>> got;
    for (auto p : ex.contour.points) got.insert({static_cast<int>(p.x), static_cast<int>(p.y)});
    EXPECT_EQ(got, enumerate_boundary(m));
    for (std::size_t i = 0; i + 1 < ex.contour.size(); ++i)
        EXPECT_TRUE(eight_adjacent(ex.contour.points[i], ex.contour.points[i + 1]));
}

TEST(ExtractContour, DiskMatchesEnumeratedBoundary) {
    Mask m = disk_mask(64, {31.3, 30.6}, 17.2);
    auto ex = extract_contour(m);
    std::set<std::pair<int, int>> got;
    for (auto p : ex.contour.points) got.insert({static_cast<int>(p.x), static_cast<int>(p.y)});
    EXPECT_EQ(got, enumerate_boundary(m));
    EXPECT_EQ(got.size(), ex.contour.size());  // no repeated pixels
    for (std::size_t i = 0; i + 1 < ex.contour.size(); ++i)
        EXPECT_TRUE(eight_adjacent(ex.contour.points[i], ex.contour.points[i + 1]));
}

TEST(ExtractContour, BandAcrossImageIsFragmented) {
    Mask m = rect_mask(10, 10, 3, 0, 5, 9);
    auto ex = extract_contour(m);
    EXPECT_TRUE(ex.fragmented);
    EXPECT_EQ(ex.chain_count, 2u);
    ASSERT_EQ(ex.contour.size(), 8u);
    EXPECT_EQ(ex.contour.points.front(), (Vec2{3, 1}));
    EXPECT_EQ(ex.contour.points.back(), (Vec2{3, 8}));
}

TEST(ExtractContour, DeterministicAndIdempotent) {
    Mask m = disk_mask(48, {23.5, 24.2}, 12.4);
    auto first = extract_contour(m).contour;
    EXPECT_EQ(first, extract_contour(m).contour);

    Mask rendered = render_polygon(first.points, m.height, m.width);
    EXPECT_EQ(rendered.pixels, m.pixels);
    EXPECT_EQ(extract_contour(rendered).contour, first);
}

TEST(ExtractContour, NoBorderPoints) {
    Mask m = disk_mask(40, {2.0, 20.0}, 12.0);
    auto ex = extract_contour(m);
    ASSERT_GT(ex.contour.size(), 3u);
    for (auto p : ex.contour.points) {
        EXPECT_GT(p.x, 0);
        EXPECT_GT(p.y, 0);
        EXPECT_LT(p.x, 39);
        EXPECT_LT(p.y, 39);
    }
    // anchored object: start at the leftmost, topmost endpoint
    EXPECT_EQ(ex.contour.points.front().x, 1.0);
    EXPECT_LT(ex.contour.points.front().y, ex.contour.points.back().y);
}

TEST(Normals, HorizontalChainPointsAwayFromForeground) {
    Mask m = rect_mask(10, 20, 0, 5, 19, 9);
    Contour c;
    for (int x = 2; x <= 15; ++x) c.points.push_back({static_cast<double>(x), 5.0});
    auto n = compute_normals(c, m);
    for (std::size_t i = 1; i + 1 < c.size(); ++i) {
        EXPECT_DOUBLE_EQ(n[i].x, 0.0);
        EXPECT_DOUBLE_EQ(n[i].y, -1.0);
    }
}

TEST(Normals, CircleWithinFiveDegreesOfRadial) {
    const Vec2 center{64.0, 64.0};
    const double r = 20.0;
    Mask m = disk_mask(128, center, r);
    Contour c;
    const int n = 126;  // about one pixel of arc per point
    for (int k = 0; k < n; ++k) {
        double a = 0.3 + 2.0 * std::numbers::pi * k / n;
        c.points.push_back(center + r * Vec2{std::cos(a), std::sin(a)});
    }
    auto normals = compute_normals(c, m);
    double worst = 0.0;
    for (std::size_t i = 1; i + 1 < c.size(); ++i) {
        EXPECT_NEAR(norm(normals[i]), 1.0, 1e-12);
        Vec2 radial = (1.0 / r) * (c.points[i] - center);
        worst = std::max(worst, angle_between(normals[i], radial));
    }
    EXPECT_LT(worst, 5.0);
}

TEST(Normals, PixelChainOnDiskPointsOutward) {
    const Vec2 center{64.0, 64.0};
    Mask m = disk_mask(128, center, 20.0);
    Contour c = extract_contour(m).contour;
    auto normals = compute_normals(c, m);
    for (std::size_t i = 1; i + 1 < c.size(); ++i) EXPECT_GT(dot(normals[i], c.points[i] - center), 0.0);
}

TEST(Normals, FlippedMaskFlipsEverySign) {
    Mask m = disk_mask(64, {30.0, 33.0}, 15.0);
    Contour c = extract_contour(m).contour;
    Mask inv = m;
    for (auto& v : inv.pixels) v = v ? 0 : 1;
    auto a = compute_normals(c, m);
    auto b = compute_normals(c, inv);
    for (std::size_t i = 1; i + 1 < c.size(); ++i) {
        EXPECT_EQ(a[i].x, -b[i].x);
        EXPECT_EQ(a[i].y, -b[i].y);
    }
}

TEST(Normals, TwoPointsRejected) {
    Contour c;
    c.points = {{1, 1}, {2, 2}};
    EXPECT_THROW(compute_normals(c, Mask(4, 4)), Error);
}

TEST(Normals, DegenerateTangentReusesNeighbor) {
    Contour c;
    c.points = {{1, 1}, {2, 1}, {3, 1}, {2, 1}, {1, 1}};
    auto n = compute_normals_unoriented(c);
    ASSERT_EQ(n.degenerate.size(), 1u);
    EXPECT_EQ(n.degenerate[0], 2u);
    EXPECT_EQ(n[2], n[1]);
}

TEST(Snap, ExactPointAndTieBreak) {
    Contour target;
    for (int i = 0; i < 12; ++i) target.points.push_back({static_cast<double>(10 * i), 0.0});
    std::vector<Vec2> q{{30.0, 0.0}};
    auto m = snap_phi(q, target);
    EXPECT_EQ(m.match[0], 3u);
    EXPECT_EQ(m.snap_distance[0], 0.0);

    Contour tie;
    for (int i = 0; i < 12; ++i) tie.points.push_back({100.0 + i, 100.0 + i});
    tie.points[4] = {0.0, 0.0};
    tie.points[9] = {10.0, 0.0};
    std::vector<Vec2> mid{{5.0, 3.0}};
    EXPECT_EQ(snap_phi(mid, tie).match[0], 4u);
}

TEST(Snap, MatchesExhaustiveScan) {
    Rng rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        Contour target = random_contour(rng, 200, 100.0);
        std::vector<Vec2> queries;
        for (int i = 0; i < 50; ++i) queries.push_back({rng.uniform(-20, 120), rng.uniform(-20, 120)});
        auto m = snap_phi(queries, target);
        for (std::size_t i = 0; i < queries.size(); ++i) {
            EXPECT_EQ(m.match[i], brute_nearest(target.points, queries[i]));
            EXPECT_DOUBLE_EQ(m.snap_distance[i], distance(queries[i], target.points[m.match[i]]));
        }
    }
}

TEST(Snap, GridTiesResolveToLowestIndex) {
    // integer lattice contour queried at half-integer points: many exact ties
    Contour target;
    for (int y = 0; y < 10; ++y)
        for (int x = 0; x < 10; ++x) target.points.push_back({static_cast<double>(x), static_cast<double>(y)});
    std::reverse(target.points.begin(), target.points.end());
    Rng rng(3);
    std::vector<Vec2> q;
    for (int i = 0; i < 200; ++i) q.push_back({std::floor(rng.uniform(-2, 12)) + 0.5, std::floor(rng.uniform(-2, 12)) + 0.5});
    auto m = snap_phi(q, target);
    for (std::size_t i = 0; i < q.size(); ++i) EXPECT_EQ(m.match[i], brute_nearest(target.points, q[i]));
}

TEST(Snap, SelfSnapIsIdentity) {
    Contour c = extract_contour(disk_mask(64, {31, 31}, 20)).contour;
    auto m = snap_phi(c.points, c);
    for (std::size_t i = 0; i < c.size(); ++i) {
        EXPECT_EQ(m.match[i], i);
        EXPECT_EQ(m.snap_distance[i], 0.0);
    }
}

TEST(Snap, EmptyTargetThrows) {
    std::vector<Vec2> q{{0, 0}};
    EXPECT_THROW(snap_phi(q, Contour{}), Error);
}

TEST(ContourIndex, LookupCases) {
    Contour c = extract_contour(disk_mask(64, {31, 31}, 20)).contour;
    EXPECT_EQ(contour_index_of(c, c.points[17]), 17u);
    Vec2 off = c.points[3] + Vec2{0.4, 0.0};
    EXPECT_EQ(contour_index_of(c, off), brute_nearest(c.points, off));
    Rng rng(11);
    for (int i = 0; i < 100; ++i) {
        Vec2 q{rng.uniform(0, 64), rng.uniform(0, 64)};
        EXPECT_EQ(contour_index_of(c, q), brute_nearest(c.points, q));
    }
    EXPECT_THROW(contour_index_of(Contour{}, {0, 0}), Error);
}

Image ramp_grid(int h, int w, Rng& rng) {
    Image img(h, w);
    for (double& v : img.data) v = rng.uniform(-1, 1);
    return img;
}

TEST(Bilinear, ExactOnGridPoints) {
    Rng rng(5);
    Image img = ramp_grid(10, 12, rng);
    std::vector<Vec2> c{{3, 7}};
    EXPECT_EQ(bilinear_sample(view(img), c).values[0], img.at(7, 3));
    for (int r = 0; r < 10; ++r)
        for (int col = 0; col < 12; ++col) {
            std::vector<Vec2> p{{static_cast<double>(col), static_cast<double>(r)}};
            EXPECT_EQ(bilinear_sample(view(img), p).values[0], img.at(r, col));
        }
}

TEST(Bilinear, CellCenterIsMean) {
    Image img(2, 2);
    img.data = {0, 1, 2, 3};
    std::vector<Vec2> c{{0.5, 0.5}};
    EXPECT_DOUBLE_EQ(bilinear_sample(view(img), c).values[0], 1.5);
}

TEST(Bilinear, LinearAlongAxisSegments) {
    Rng rng(9);
    Image img = ramp_grid(8, 8, rng);
    for (int k = 0; k < 50; ++k) {
        int x = static_cast<int>(rng.index(7)), y = static_cast<int>(rng.index(8));
        double t = rng.uniform();
        std::vector<Vec2> c{{x + t, static_cast<double>(y)}};
        EXPECT_NEAR(bilinear_sample(view(img), c).values[0], (1 - t) * img.at(y, x) + t * img.at(y, x + 1), 1e-14);
    }
}

TEST(Bilinear, CoordinateDerivativesMatchFiniteDifferences) {
    Rng rng(13);
    Image img = ramp_grid(16, 16, rng);
    const double h = 1e-4;
    for (int k = 0; k < 100; ++k) {
        Vec2 p{rng.uniform(0.5, 14.5), rng.uniform(0.5, 14.5)};
        // keep the stencil inside one cell so the finite difference is exact
        if (std::fabs(p.x - std::round(p.x)) < 2 * h || std::fabs(p.y - std::round(p.y)) < 2 * h) continue;
        std::vector<Vec2> pts{p, p + Vec2{h, 0}, p - Vec2{h, 0}, p + Vec2{0, h}, p - Vec2{0, h}};
        auto s = bilinear_sample(view(img), pts);
        double fdx = (s.values[1] - s.values[2]) / (2 * h);
        double fdy = (s.values[3] - s.values[4]) / (2 * h);
        EXPECT_LT(std::fabs(s.d_dx[0] - fdx), 1e-5 * std::max(std::fabs(fdx), 1e-3));
        EXPECT_LT(std::fabs(s.d_dy[0] - fdy), 1e-5 * std::max(std::fabs(fdy), 1e-3));
        EXPECT_NE(s.d_dx[0], 0.0);
    }
}

TEST(Bilinear, ClampsOutOfRangeAndFlagsNaN) {
    Image img(4, 4, 0.25);
    img.at(3, 3) = 1.0;
    std::vector<Vec2> c{{10.0, 10.0}, {-3.0, 1.0}};
    auto s = bilinear_sample(view(img), c);
    EXPECT_EQ(s.clamped, 2u);
    EXPECT_EQ(s.values[0], 1.0);
    EXPECT_EQ(s.values[1], 0.25);
    EXPECT_EQ(s.d_dx[0], 0.0);

    img.at(1, 1) = std::nan("");
    std::vector<Vec2> near{{1.5, 1.5}};
    auto t = bilinear_sample(view(img), near);
    EXPECT_TRUE(t.has_nan);
    EXPECT_TRUE(std::isnan(t.values[0]));
}

TEST(Bilinear, VectorFieldsSampleEveryChannel) {
    std::vector<double> data{0, 1, 2, 3, 10, 11, 12, 13};
    GridView g{2, 2, 2, data};
    std::vector<Vec2> c{{0.5, 0.5}};
    auto s = bilinear_sample(g, c);
    EXPECT_DOUBLE_EQ(s.value(0, 0), 1.5);
    EXPECT_DOUBLE_EQ(s.value(0, 1), 11.5);
}

}  // namespace
}  // namespace contrack
