#include "fixtures.hpp"
#include "metric_oracles.hpp"

#include <contrack/errors.hpp>
#include <contrack/evaluation.hpp>

#include <gtest/gtest.h>

#include <json.hpp>

#include <cmath>

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

TEST(SpatialAccuracy, HandExamples) {
    SparseLabels labels({{0, 0, 0.5, 0.5}, {1, 0, 0.5, 0.5}, {2, 0, 0.1, 0.1}});
    Predictions p;
    p.set(1, 0, {0.53, 0.5});
    p.set(2, 0, {0.1, 0.14});
    EXPECT_EQ(spatial_accuracy(p, labels, 0.02), 0.0);
    EXPECT_EQ(spatial_accuracy(p, labels, 0.035), 0.5);
    EXPECT_EQ(spatial_accuracy(p, labels, 0.06), 1.0);
    // strict comparison: a distance equal to tau is a miss
    Predictions on_edge;
    on_edge.set(1, 0, {0.5, 0.75});
    on_edge.set(2, 0, {0.1, 0.1});
    EXPECT_EQ(spatial_accuracy(on_edge, labels, 0.25), 0.5);
}

TEST(SpatialAccuracy, Errors) {
    SparseLabels only_first({{0, 0, 0.5, 0.5}});
    EXPECT_EQ(kind_of([&] { spatial_accuracy(Predictions{}, only_first, 0.02); }), ErrorKind::NoLabels);
    SparseLabels labels({{1, 3, 0.5, 0.5}});
    EXPECT_EQ(kind_of([&] { spatial_accuracy(Predictions{}, labels, 0.02); }), ErrorKind::ConfigError);
}

TEST(ContourAccuracy, HandExample) {
    // 100-point line at y = 10 on a 100 x 20 frame
    Contour c;
    c.frame = 1;
    for (int i = 0; i < 100; ++i) c.points.push_back({static_cast<double>(i), 10.0});
    std::vector<Contour> cs{c, c};
    cs[0].frame = 0;
    SparseLabels labels({{1, 0, 0.40, 0.5}, {1, 1, 0.10, 0.5}});
    Predictions p;
    p.set(1, 0, {0.42, 0.9});  // index gap 2 -> 0.02
    p.set(1, 1, {0.105, 0.5});  // 10.5 snaps to 10, gap 0
    EXPECT_EQ(contour_accuracy(p, labels, cs, 100, 20, 0.01), 0.5);
    EXPECT_EQ(contour_accuracy(p, labels, cs, 100, 20, 0.02), 0.5);
    EXPECT_EQ(contour_accuracy(p, labels, cs, 100, 20, 0.03), 1.0);
    // no wraparound: the two ends of the contour are far apart
    SparseLabels ends({{1, 0, 0.0, 0.5}});
    Predictions far;
    far.set(1, 0, {0.99, 0.5});
    EXPECT_EQ(contour_accuracy(far, ends, cs, 100, 20, 0.5), 0.0);
}

TEST(Accuracy, MatchesScalarOracleOnRandomInstances) {
    Rng rng(1234);
    for (int trial = 0; trial < 1000; ++trial) {
        Instance in = random_instance(rng);
        SparseLabels labels = in.sparse();
        Predictions pred = in.predicted();
        for (double tau : kSpatialTaus)
            EXPECT_NEAR(spatial_accuracy(pred, labels, tau), sa_oracle(in.labels, in.predictions, tau), 1e-12);
        for (double tau : kContourTaus)
            EXPECT_NEAR(contour_accuracy(pred, labels, in.contours, in.width, in.height, tau),
                        ca_oracle(in.labels, in.predictions, in.contours, in.width, in.height, tau), 1e-12);
    }
}

TEST(Accuracy, MonotoneInTau) {
    Rng rng(77);
    for (int trial = 0; trial < 200; ++trial) {
        Instance in = random_instance(rng);
        SparseLabels labels = in.sparse();
        Predictions pred = in.predicted();
        double prev_sa = 0.0, prev_ca = 0.0;
        for (double tau = 0.0; tau <= 1.0; tau += 0.01) {
            const double sa = spatial_accuracy(pred, labels, tau);
            const double ca = contour_accuracy(pred, labels, in.contours, in.width, in.height, tau);
            EXPECT_GE(sa, prev_sa);
            EXPECT_GE(ca, prev_ca);
            prev_sa = sa;
            prev_ca = ca;
        }
    }
}

TEST(Accuracy, PerFrameAveragesToOverallWithEqualCounts) {
    Rng rng(5);
    Instance in = random_instance(rng);
    SparseLabels labels = in.sparse();
    auto per = spatial_accuracy_per_frame(in.predicted(), labels, 0.04);
    ASSERT_EQ(per.size(), in.contours.size() - 1);
    double mean = 0.0;
    for (std::size_t k = 0; k < per.size(); ++k) {
        EXPECT_EQ(per[k].first, static_cast<int>(k) + 1);
        mean += per[k].second / static_cast<double>(per.size());
    }
    EXPECT_NEAR(mean, spatial_accuracy(in.predicted(), labels, 0.04), 1e-12);
    EXPECT_EQ(contour_accuracy_per_frame(in.predicted(), labels, in.contours, in.width, in.height, 0.01).size(),
              per.size());
}

TEST(CumulativeMean, Examples) {
    EXPECT_EQ(cumulative_mean_accuracy({}), std::vector<double>{});
    EXPECT_EQ(cumulative_mean_accuracy({1.0, 0.0, 0.5}), (std::vector<double>{1.0, 0.5, 0.5}));
    EXPECT_EQ(cumulative_mean_accuracy({0.25, 0.75}), (std::vector<double>{0.25, 0.5}));
}

TEST(AccuracyByVelocity, BinsByNormalSpeed) {
    // horizontal line at y = 10 on a 100 x 100 frame; unoriented normals point along +-y
    Contour c;
    for (int i = 0; i < 50; ++i) c.points.push_back({static_cast<double>(i), 10.0});
    std::vector<Contour> cs{c, c, c};
    std::vector<NormalField> ns{compute_normals_unoriented(c), compute_normals_unoriented(c),
                                compute_normals_unoriented(c)};
    SparseLabels labels({{0, 0, 0.10, 0.10},
                         {1, 0, 0.10, 0.135},  // 3.5 px along the normal
                         {0, 1, 0.30, 0.10},
                         {1, 1, 0.35, 0.105},  // 0.5 px along the normal, 5 px along the line
                         {2, 1, 0.35, 0.125}}); // 2 px
    Predictions p;
    p.set(1, 0, {0.10, 0.135});
    p.set(1, 1, {0.30, 0.105});
    p.set(2, 1, {0.35, 0.125});
    auto bins = accuracy_by_velocity(p, labels, cs, ns, 100, 100);
    ASSERT_EQ(bins.size(), 3u);
    EXPECT_EQ(bins[0].bin, 0);
    EXPECT_EQ(bins[0].count, 1u);
    EXPECT_EQ(bins[0].sa, 0.0);
    EXPECT_EQ(bins[1].bin, 2);
    EXPECT_EQ(bins[1].sa, 1.0);
    EXPECT_EQ(bins[2].bin, 3);
    EXPECT_EQ(bins[2].sa, 1.0);
}

TEST(PredictionsFromTracks, FollowsTheTrajectoryOfTheNearestStartPoint) {
    Contour c0, c1;
    c1.frame = 1;
    for (int i = 0; i < 10; ++i) {
        c0.points.push_back({static_cast<double>(i), 0.0});
        c1.points.push_back({static_cast<double>(i), 5.0});
    }
    CorrespondenceMap m;
    m.source_frame = 0;
    m.target_frame = 1;
    for (std::size_t i = 0; i < 10; ++i) m.match.push_back(9 - i);
    m.snap_distance.assign(10, 0.0);
    std::vector<Contour> cs{c0, c1};
    TrackSet ts = chain_correspondences(cs, {m});
    SparseLabels labels({{0, 4, 0.21, 0.01}, {1, 4, 0.5, 0.5}, {1, 8, 0.1, 0.1}});
    Predictions p = predictions_from_tracks(ts, labels, cs, 10, 10);
    // frame-0 label at (2.1, 0.1) starts on index 2, which maps to index 7
    EXPECT_EQ(p.find(1, 4), (Vec2{0.7, 0.5}));
    EXPECT_EQ(p.find(0, 4), (Vec2{0.2, 0.0}));
    // point 8 first appears on frame 1 and is followed from there
    EXPECT_EQ(p.find(1, 8), (Vec2{0.1, 0.5}));
}

TEST(Evaluate, PoolsAcrossVideosAndRendersReports) {
    Rng rng(9);
    std::vector<Instance> ins{random_instance(rng), random_instance(rng)};
    std::vector<SparseLabels> labels;
    std::vector<TrackSet> tracks;
    std::vector<std::vector<NormalField>> normals;
    for (auto& in : ins) {
        labels.push_back(in.sparse());
        std::vector<CorrespondenceMap> maps;
        for (std::size_t t = 0; t + 1 < in.contours.size(); ++t)
            maps.push_back(snap_phi(in.contours[t].points, in.contours[t + 1]));
        tracks.push_back(chain_correspondences(in.contours, maps));
        normals.emplace_back();
        for (const auto& c : in.contours) normals.back().push_back(compute_normals_unoriented(c));
    }
    std::vector<EvalInput> inputs;
    for (std::size_t v = 0; v < ins.size(); ++v)
        inputs.push_back({"v" + std::to_string(v), &tracks[v], &labels[v], &ins[v].contours, &normals[v],
                          ins[v].width, ins[v].height});
    EvalReport r = evaluate(inputs);
    ASSERT_EQ(r.videos.size(), 2u);
    for (int k = 0; k < 3; ++k) {
        const double n0 = static_cast<double>(r.videos[0].scored_pairs), n1 = static_cast<double>(r.videos[1].scored_pairs);
        EXPECT_NEAR(r.sa[k], (r.videos[0].sa[k] * n0 + r.videos[1].sa[k] * n1) / (n0 + n1), 1e-12);
        EXPECT_NEAR(r.ca[k], (r.videos[0].ca[k] * n0 + r.videos[1].ca[k] * n1) / (n0 + n1), 1e-12);
        Predictions pred = predictions_from_tracks(tracks[0], labels[0], ins[0].contours, ins[0].width, ins[0].height);
        EXPECT_EQ(r.videos[0].sa[k], spatial_accuracy(pred, labels[0], kSpatialTaus[k]));
    }
    EXPECT_EQ(r.videos[0].cma_sa.size(), ins[0].contours.size() - 1);

    auto j = nlohmann::json::parse(report_to_json(r));
    EXPECT_EQ(j["overall"]["SA_.04"].get<double>(), r.sa[1]);
    EXPECT_EQ(j["videos"][1]["name"], "v1");
    EXPECT_TRUE(j["videos"][0].contains("accuracy_by_velocity"));
    const std::string md = report_to_markdown(r);
    EXPECT_EQ(md.substr(0, md.find('\n')), "| Video | SA_.02 | SA_.04 | SA_.06 | CA_.01 | CA_.02 | CA_.03 |");
    EXPECT_NE(md.find("| **all** |"), std::string::npos);
    EXPECT_NE(md.find("| v0 |"), std::string::npos);

    inputs[1].normals = nullptr;
    EXPECT_EQ(kind_of([&] { evaluate(inputs); }), ErrorKind::ConfigError);
}

}  // namespace
}  // namespace contrack
