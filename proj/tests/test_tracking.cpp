#include "fixtures.hpp"

#include <contrack/errors.hpp>
#include <contrack/tracking.hpp>

#include <gtest/gtest.h>

#include <json.hpp>

#include <array>
#include <cmath>
#include <set>

namespace contrack {
namespace {

using namespace contrack::testing;

template <typename Fn>
ErrorKind kind_of(Fn fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.kind();
    }
    ADD_FAILURE() << "no error thrown";
    return ErrorKind::IoError;
}

Contour line_contour(std::size_t n, double y, int frame) {
    Contour c;
    c.frame = frame;
    for (std::size_t i = 0; i < n; ++i) c.points.push_back({static_cast<double>(i), y});
    return c;
}

CorrespondenceMap map_of(std::vector<std::size_t> match, int t) {
    CorrespondenceMap m;
    m.source_frame = t;
    m.target_frame = t + 1;
    m.match = std::move(match);
    m.snap_distance.assign(m.match.size(), 0.0);
    return m;
}

TEST(ChainCorrespondences, FollowsMatchesAndSpawnsBirths) {
    std::vector<Contour> cs{line_contour(3, 0, 0), line_contour(4, 1, 1), line_contour(2, 2, 2)};
    TrackSet ts = chain_correspondences(cs, {map_of({0, 0, 2}, 0), map_of({1, 1, 0, 0}, 1)});
    // three frame-0 tracks, then births at frame 1 for indices 1 and 3
    ASSERT_EQ(ts.trajectories.size(), 5u);
    EXPECT_EQ(ts.at(0, 2).index, 1u);
    EXPECT_EQ(ts.at(1, 1).index, 0u);
    EXPECT_EQ(ts.at(2, 2).index, 0u);
    EXPECT_EQ(ts.trajectories[3].birth, 1);
    EXPECT_EQ(ts.trajectories[3].path.front().index, 1u);
    EXPECT_EQ(ts.trajectories[4].path.front().index, 3u);
    EXPECT_EQ(ts.at(4, 2).point, (Vec2{0, 2}));
    EXPECT_THROW(ts.at(3, 0), Error);
    EXPECT_NO_THROW(check_trackset(ts, cs));
}

TEST(ChainCorrespondences, EveryContourPointIsCoveredOnEveryFrame) {
    Rng rng(21);
    for (int trial = 0; trial < 50; ++trial) {
        const int frames = 2 + static_cast<int>(rng.uniform() * 5);
        std::vector<Contour> cs;
        for (int f = 0; f < frames; ++f) cs.push_back(line_contour(1 + static_cast<std::size_t>(rng.uniform() * 9), f, f));
        std::vector<CorrespondenceMap> maps;
        for (int f = 0; f + 1 < frames; ++f) {
            std::vector<std::size_t> m(cs[f].size());
            for (auto& j : m) j = static_cast<std::size_t>(rng.uniform() * cs[f + 1].size());
            maps.push_back(map_of(m, f));
        }
        TrackSet ts = chain_correspondences(cs, maps);
        check_trackset(ts, cs);
        for (int f = 0; f < frames; ++f) {
            std::set<std::size_t> seen;
            for (const auto& tr : ts.trajectories) {
                EXPECT_EQ(tr.birth + static_cast<int>(tr.path.size()), frames);
                if (f >= tr.birth) seen.insert(tr.path[f - tr.birth].index);
            }
            EXPECT_EQ(seen.size(), cs[f].size());
        }
        std::size_t from_start = 0;
        for (const auto& tr : ts.trajectories) from_start += tr.birth == 0;
        EXPECT_EQ(from_start, cs[0].size());
    }
}

TEST(ChainCorrespondences, Errors) {
    std::vector<Contour> cs{line_contour(3, 0, 0), line_contour(3, 1, 1)};
    EXPECT_EQ(kind_of([&] { chain_correspondences(cs, {}); }), ErrorKind::ShapeMismatch);
    EXPECT_EQ(kind_of([&] { chain_correspondences(cs, {map_of({0, 1}, 0)}); }), ErrorKind::ShapeMismatch);
    EXPECT_EQ(kind_of([&] { chain_correspondences(cs, {map_of({0, 1, 3}, 0)}); }), ErrorKind::ShapeMismatch);
    EXPECT_EQ(kind_of([&] { chain_correspondences({}, {}); }), ErrorKind::ConfigError);
}

TEST(TrackSetJson, RoundTripAndSchema) {
    std::vector<Contour> cs{line_contour(3, 0.125, 0), line_contour(4, 1.1, 1)};
    TrackSet ts = chain_correspondences(cs, {map_of({2, 0, 1}, 0)});
    const std::string text = trackset_to_json(ts);
    EXPECT_EQ(trackset_from_json(text), ts);
    auto j = nlohmann::json::parse(text);
    ASSERT_TRUE(j.at("trajectories").is_array());
    EXPECT_EQ(j["trajectories"][0]["birth"], 0);
    EXPECT_EQ(j["trajectories"][0]["path"][1], nlohmann::json::parse("[1, 2, 2.0, 1.1]"));
    EXPECT_EQ(j["trajectories"].back()["birth"], 1);
    EXPECT_EQ(kind_of([] { trackset_from_json("{"); }), ErrorKind::ParseError);
    EXPECT_EQ(kind_of([] { trackset_from_json(R"({"trajectories":[{"birth":0,"path":[[0,1]]}]})"); }),
              ErrorKind::ParseError);
    EXPECT_EQ(kind_of([] { trackset_from_json(R"({"tracks":[]})"); }), ErrorKind::ParseError);
}

TEST(CheckTrackSet, NamesBrokenInvariants) {
    std::vector<Contour> cs{line_contour(3, 0, 0), line_contour(3, 1, 1)};
    const TrackSet good = chain_correspondences(cs, {map_of({0, 1, 2}, 0)});
    TrackSet bad = good;
    bad.trajectories[0].path[1].frame = 2;
    EXPECT_EQ(kind_of([&] { check_trackset(bad, cs); }), ErrorKind::ParseError);
    bad = good;
    bad.trajectories[1].path[1].point.x += 0.5;
    EXPECT_EQ(kind_of([&] { check_trackset(bad, cs); }), ErrorKind::ParseError);
    bad = good;
    bad.trajectories[2].path[0].index = 7;
    EXPECT_EQ(kind_of([&] { check_trackset(bad, cs); }), ErrorKind::ParseError);
    bad = good;
    bad.trajectories[0].birth = 1;
    EXPECT_EQ(kind_of([&] { check_trackset(bad, cs); }), ErrorKind::ParseError);
}

TEST(TrackMethod, ParsesNames) {
    EXPECT_EQ(parse_track_method("learned"), TrackMethod::Learned);
    EXPECT_EQ(parse_track_method("mechanical"), TrackMethod::Mechanical);
    EXPECT_EQ(to_string(TrackMethod::Mechanical), "mechanical");
    EXPECT_EQ(kind_of([] { parse_track_method("optical"); }), ErrorKind::ConfigError);
}

class SequenceFixture : public ::testing::Test {
protected:
    void SetUp() override { video = generate_synthetic(small_blob_spec(32, 4)).prepared; }
    PreparedVideo video;
};

TEST_F(SequenceFixture, ZeroHeadTrackingIsNearestPointSnapping) {
    TrackerConfig cfg = tiny_config(true);
    cfg.encoder.image_size = 32;
    const TrackerWeights w = init_weights(cfg);
    TrackOptions opt;
    opt.weights = &w;
    auto maps = track_pairs(video.frames, video.contours, opt);
    ASSERT_EQ(maps.size(), 3u);
    for (std::size_t t = 0; t < maps.size(); ++t) {
        ASSERT_EQ(maps[t].size(), video.contours[t].size());
        for (std::size_t i = 0; i < maps[t].size(); ++i)
            EXPECT_EQ(maps[t].match[i], brute_nearest(video.contours[t + 1].points, video.contours[t].points[i]));
    }
    TrackSet ts = track_sequence(video.frames, video.contours, opt);
    check_trackset(ts, video.contours);
    EXPECT_EQ(ts, chain_correspondences(video.contours, maps));
}

TEST_F(SequenceFixture, MechanicalTrackingProducesValidTracks) {
    TrackOptions opt;
    opt.method = TrackMethod::Mechanical;
    TrackSet ts = track_sequence(video.frames, video.contours, opt);
    check_trackset(ts, video.contours);
    EXPECT_EQ(ts, track_sequence(video.frames, video.contours, opt));
}

TEST_F(SequenceFixture, Errors) {
    TrackOptions opt;
    EXPECT_EQ(kind_of([&] { track_sequence(video.frames, video.contours, opt); }), ErrorKind::ConfigError);
    opt.method = TrackMethod::Mechanical;
    std::vector<Image> one{video.frames[0]};
    std::vector<Contour> one_c{video.contours[0]};
    EXPECT_EQ(kind_of([&] { track_sequence(one, one_c, opt); }), ErrorKind::ConfigError);
}

using Rgb = std::array<std::uint8_t, 3>;

Rgb pixel(const RgbImage& img, int row, int col) {
    const std::size_t k = (static_cast<std::size_t>(row) * img.width + col) * 3;
    return {img.data[k], img.data[k + 1], img.data[k + 2]};
}

std::vector<NormalField> unoriented(const std::vector<Contour>& cs) {
    std::vector<NormalField> out;
    for (const auto& c : cs) out.push_back(compute_normals_unoriented(c));
    return out;
}

TEST(QuantifyVelocity, UniformNormalShift) {
    // a straight contour moving 3 px along its normal each step
    std::vector<Contour> cs;
    for (int f = 0; f < 4; ++f) cs.push_back(line_contour(10, 5.0 + 3.0 * f, f));
    std::vector<NormalField> ns = unoriented(cs);
    const double sign = ns[0][4].y;
    ASSERT_EQ(std::fabs(sign), 1.0);
    std::vector<CorrespondenceMap> maps;
    for (int f = 0; f < 3; ++f) {
        std::vector<std::size_t> id(10);
        for (std::size_t i = 0; i < 10; ++i) id[i] = i;
        maps.push_back(map_of(id, f));
    }
    VelocityMap vm = quantify_velocity(chain_correspondences(cs, maps), cs, ns, 0, 9);
    EXPECT_EQ(vm.rows(), 10u);
    EXPECT_EQ(vm.steps, 3);
    for (std::size_t r = 0; r < vm.rows(); ++r)
        for (int t = 0; t < vm.steps; ++t) EXPECT_EQ(vm.at(r, t), 3.0 * sign);
    EXPECT_EQ(velocity_to_csv(quantify_velocity(chain_correspondences(cs, maps), cs, ns, 2, 3)),
              sign > 0 ? "position,t0,t1,t2\n2,3,3,3\n3,3,3,3\n" : "position,t0,t1,t2\n2,-3,-3,-3\n3,-3,-3,-3\n");
}

TEST(QuantifyVelocity, StaticContourIsZeroAndTranslationInvariant) {
    Rng rng(8);
    for (int trial = 0; trial < 20; ++trial) {
        Contour c0 = arc_contour({20, 20}, 10, 0.0, 5.0, 30);
        std::vector<Contour> cs{c0, c0, c0};
        cs[1].frame = 1;
        cs[2].frame = 2;
        std::vector<CorrespondenceMap> maps;
        for (int f = 0; f < 2; ++f) {
            std::vector<std::size_t> m(30);
            for (auto& j : m) j = static_cast<std::size_t>(rng.uniform() * 30);
            maps.push_back(map_of(m, f));
        }
        VelocityMap a = quantify_velocity(chain_correspondences(cs, maps), cs, unoriented(cs), 0, 29);
        Vec2 shift{rng.uniform(-50, 50), rng.uniform(-50, 50)};
        std::vector<Contour> moved = cs;
        for (auto& c : moved)
            for (auto& p : c.points) p = p + shift;
        VelocityMap b = quantify_velocity(chain_correspondences(moved, maps), moved, unoriented(moved), 0, 29);
        for (std::size_t k = 0; k < a.values.size(); ++k) EXPECT_NEAR(a.values[k], b.values[k], 1e-9);

        std::vector<CorrespondenceMap> id;
        for (int f = 0; f < 2; ++f) {
            std::vector<std::size_t> m(30);
            for (std::size_t i = 0; i < 30; ++i) m[i] = i;
            id.push_back(map_of(m, f));
        }
        VelocityMap still = quantify_velocity(chain_correspondences(cs, id), cs, unoriented(cs), 0, 29);
        for (double v : still.values) EXPECT_EQ(v, 0.0);
    }
}

TEST(QuantifyVelocity, WindowOutOfRange) {
    std::vector<Contour> cs{line_contour(5, 0, 0), line_contour(5, 1, 1)};
    TrackSet ts = chain_correspondences(cs, {map_of({0, 1, 2, 3, 4}, 0)});
    auto ns = unoriented(cs);
    EXPECT_EQ(kind_of([&] { quantify_velocity(ts, cs, ns, 0, 5); }), ErrorKind::WindowOutOfRange);
    EXPECT_EQ(kind_of([&] { quantify_velocity(ts, cs, ns, 3, 2); }), ErrorKind::WindowOutOfRange);
    EXPECT_NO_THROW(quantify_velocity(ts, cs, ns, 4, 4));
}

TEST(RenderVelocity, SignsAndScale) {
    VelocityMap vm;
    vm.window_end = 1;
    vm.steps = 2;
    vm.values = {2.0, -2.0, 0.0, 1.0};
    RgbImage img = render_velocity(vm, 3);
    EXPECT_EQ(img.width, 6);
    EXPECT_EQ(img.height, 6);
    EXPECT_EQ(pixel(img, 0, 0), (Rgb{255, 0, 0}));
    EXPECT_EQ(pixel(img, 2, 5), (Rgb{0, 0, 255}));
    EXPECT_EQ(pixel(img, 3, 0), (Rgb{255, 255, 255}));
    EXPECT_EQ(pixel(img, 5, 5), (Rgb{255, 128, 128}));
}

TEST(RenderCorrespondence, DrawsPointsAndArrows) {
    Image frame(20, 20);
    Contour a = line_contour(3, 5, 0), b = line_contour(3, 15, 1);
    RgbImage img = render_correspondence(frame, a, b, map_of({0, 1, 2}, 0));
    EXPECT_EQ(pixel(img, 10, 1), (Rgb{255, 255, 255}));
    EXPECT_EQ(pixel(img, 0, 0), (Rgb{0, 0, 0}));
    EXPECT_EQ(kind_of([&] { render_correspondence(frame, a, b, map_of({0}, 0)); }), ErrorKind::ShapeMismatch);
}

}  // namespace
}  // namespace contrack
