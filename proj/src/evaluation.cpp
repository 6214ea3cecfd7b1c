#include <contrack/errors.hpp>
#include <contrack/evaluation.hpp>

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

namespace contrack {

using nlohmann::json;

void Predictions::set(int frame, int point_id, Vec2 normalized) { points_[{frame, point_id}] = normalized; }

std::optional<Vec2> Predictions::find(int frame, int point_id) const {
    auto it = points_.find({frame, point_id});
    if (it == points_.end()) return std::nullopt;
    return it->second;
}

namespace {

struct Tally {
    std::size_t hits = 0;
    std::size_t total = 0;
    double value() const { return total == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(total); }
};

Vec2 prediction_for(const Predictions& predicted, const LabelPoint& g) {
    auto p = predicted.find(g.frame, g.point_id);
    if (!p)
        throw Error(ErrorKind::ConfigError, "no prediction for label point " + std::to_string(g.point_id) +
                                                " on frame " + std::to_string(g.frame));
    return *p;
}

void require_labels(const SparseLabels& labels) {
    for (const auto& g : labels.points())
        if (g.frame >= 1) return;
    throw Error(ErrorKind::NoLabels, "no labels on frames after the first");
}

Vec2 to_pixels(Vec2 normalized, int width, int height) { return {normalized.x * width, normalized.y * height}; }

bool spatial_hit(const Predictions& predicted, const LabelPoint& g, double tau) {
    Vec2 p = prediction_for(predicted, g);
    return distance(p, Vec2{g.x, g.y}) < tau;
}

bool contour_hit(const Predictions& predicted, const LabelPoint& g, const std::vector<Contour>& contours, int width,
                 int height, double tau) {
    if (g.frame >= static_cast<int>(contours.size()))
        throw Error(ErrorKind::ShapeMismatch, "label frame " + std::to_string(g.frame) + " has no contour");
    const Contour& c = contours[static_cast<std::size_t>(g.frame)];
    if (c.empty()) throw Error(ErrorKind::EmptyContour, "contour of frame " + std::to_string(g.frame) + " is empty");
    const Vec2 p = prediction_for(predicted, g);
    const auto ip = static_cast<double>(contour_index_of(c, to_pixels(p, width, height)));
    const auto ig = static_cast<double>(contour_index_of(c, to_pixels({g.x, g.y}, width, height)));
    return std::fabs(ip - ig) / static_cast<double>(c.size()) < tau;
}

template <typename HitFn>
std::vector<std::pair<int, double>> per_frame(const SparseLabels& labels, HitFn hit) {
    std::map<int, Tally> frames;
    for (const auto& g : labels.points()) {
        if (g.frame < 1) continue;
        Tally& t = frames[g.frame];
        ++t.total;
        if (hit(g)) ++t.hits;
    }
    std::vector<std::pair<int, double>> out;
    for (const auto& [f, t] : frames) out.emplace_back(f, t.value());
    return out;
}

}  // namespace

double spatial_accuracy(const Predictions& predicted, const SparseLabels& labels, double tau) {
    require_labels(labels);
    Tally t;
    for (const auto& g : labels.points()) {
        if (g.frame < 1) continue;
        ++t.total;
        if (spatial_hit(predicted, g, tau)) ++t.hits;
    }
    return t.value();
}

double contour_accuracy(const Predictions& predicted, const SparseLabels& labels, const std::vector<Contour>& contours,
                        int width, int height, double tau) {
    require_labels(labels);
    Tally t;
    for (const auto& g : labels.points()) {
        if (g.frame < 1) continue;
        ++t.total;
        if (contour_hit(predicted, g, contours, width, height, tau)) ++t.hits;
    }
    return t.value();
}

std::vector<std::pair<int, double>> spatial_accuracy_per_frame(const Predictions& predicted,
                                                               const SparseLabels& labels, double tau) {
    return per_frame(labels, [&](const LabelPoint& g) { return spatial_hit(predicted, g, tau); });
}

std::vector<std::pair<int, double>> contour_accuracy_per_frame(const Predictions& predicted,
                                                               const SparseLabels& labels,
                                                               const std::vector<Contour>& contours, int width,
                                                               int height, double tau) {
    return per_frame(labels,
                     [&](const LabelPoint& g) { return contour_hit(predicted, g, contours, width, height, tau); });
}

std::vector<double> cumulative_mean_accuracy(const std::vector<double>& series) {
    std::vector<double> out;
    out.reserve(series.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < series.size(); ++i) {
        sum += series[i];
        out.push_back(sum / static_cast<double>(i + 1));
    }
    return out;
}

std::vector<VelocityBin> accuracy_by_velocity(const Predictions& predicted, const SparseLabels& labels,
                                              const std::vector<Contour>& contours,
                                              const std::vector<NormalField>& normals, int width, int height) {
    std::map<int, Tally> bins;
    for (const auto& g : labels.points()) {
        if (g.frame < 1) continue;
        auto prev = labels.find(g.frame - 1, g.point_id);
        if (!prev) continue;
        const auto f = static_cast<std::size_t>(g.frame - 1);
        if (f >= contours.size() || f >= normals.size() || normals[f].size() < 3) continue;
        const Vec2 a = to_pixels(*prev, width, height), b = to_pixels({g.x, g.y}, width, height);
        const std::size_t i = std::clamp<std::size_t>(contour_index_of(contours[f], a), 1, normals[f].size() - 2);
        const double v = std::fabs(dot(b - a, normals[f][i]));
        Tally& t = bins[static_cast<int>(std::floor(v))];
        ++t.total;
        if (spatial_hit(predicted, g, 0.02)) ++t.hits;
    }
    std::vector<VelocityBin> out;
    for (const auto& [b, t] : bins) out.push_back({b, t.total, t.value()});
    return out;
}

Predictions predictions_from_tracks(const TrackSet& tracks, const SparseLabels& labels,
                                    const std::vector<Contour>& contours, int width, int height) {
    Predictions out;
    for (int id : labels.point_ids()) {
        int start = -1;
        Vec2 g;
        for (int f : labels.frames()) {
            if (auto p = labels.find(f, id)) {
                start = f;
                g = *p;
                break;
            }
        }
        if (start < 0 || start >= static_cast<int>(contours.size())) continue;
        const std::size_t idx = contour_index_of(contours[static_cast<std::size_t>(start)], to_pixels(g, width, height));
        const Trajectory* chosen = nullptr;
        for (const auto& tr : tracks.trajectories) {
            const int k = start - tr.birth;
            if (k < 0 || k >= static_cast<int>(tr.path.size())) continue;
            if (tr.path[static_cast<std::size_t>(k)].index == idx) {
                chosen = &tr;
                break;
            }
        }
        if (chosen == nullptr) continue;
        for (std::size_t k = static_cast<std::size_t>(start - chosen->birth); k < chosen->path.size(); ++k) {
            const TrackStep& s = chosen->path[k];
            out.set(s.frame, id, {s.point.x / width, s.point.y / height});
        }
    }
    return out;
}

EvalReport evaluate(const std::vector<EvalInput>& inputs) {
    EvalReport report;
    Tally pooled_sa[3], pooled_ca[3];
    for (const auto& in : inputs) {
        if (!in.tracks || !in.labels || !in.contours || !in.normals)
            throw Error(ErrorKind::ConfigError, "evaluation input '" + in.name + "' is incomplete");
        const SparseLabels& labels = *in.labels;
        require_labels(labels);
        Predictions pred = predictions_from_tracks(*in.tracks, labels, *in.contours, in.width, in.height);
        VideoScores vs;
        vs.name = in.name;
        for (const auto& g : labels.points())
            if (g.frame >= 1) ++vs.scored_pairs;
        for (int k = 0; k < 3; ++k) {
            vs.sa[k] = spatial_accuracy(pred, labels, kSpatialTaus[k]);
            vs.ca[k] = contour_accuracy(pred, labels, *in.contours, in.width, in.height, kContourTaus[k]);
            for (const auto& g : labels.points()) {
                if (g.frame < 1) continue;
                ++pooled_sa[k].total;
                ++pooled_ca[k].total;
                if (spatial_hit(pred, g, kSpatialTaus[k])) ++pooled_sa[k].hits;
                if (contour_hit(pred, g, *in.contours, in.width, in.height, kContourTaus[k])) ++pooled_ca[k].hits;
            }
        }
        std::vector<double> sa_series, ca_series;
        for (const auto& [f, v] : spatial_accuracy_per_frame(pred, labels, kSpatialTaus[0])) sa_series.push_back(v);
        for (const auto& [f, v] : contour_accuracy_per_frame(pred, labels, *in.contours, in.width, in.height,
                                                             kContourTaus[0]))
            ca_series.push_back(v);
        vs.cma_sa = cumulative_mean_accuracy(sa_series);
        vs.cma_ca = cumulative_mean_accuracy(ca_series);
        vs.by_velocity = accuracy_by_velocity(pred, labels, *in.contours, *in.normals, in.width, in.height);
        report.videos.push_back(std::move(vs));
    }
    for (int k = 0; k < 3; ++k) {
        report.sa[k] = pooled_sa[k].value();
        report.ca[k] = pooled_ca[k].value();
    }
    return report;
}

namespace {

json scores_json(const double* sa, const double* ca) {
    return {{"SA_.02", sa[0]}, {"SA_.04", sa[1]}, {"SA_.06", sa[2]},
            {"CA_.01", ca[0]}, {"CA_.02", ca[1]}, {"CA_.03", ca[2]}};
}

std::string fixed3(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3f", v);
    return buf;
}

}  // namespace

std::string report_to_json(const EvalReport& report) {
    json videos = json::array();
    for (const auto& v : report.videos) {
        json bins = json::array();
        for (const auto& b : v.by_velocity) bins.push_back({{"bin", b.bin}, {"count", b.count}, {"SA_.02", b.sa}});
        videos.push_back({{"name", v.name},
                          {"scored_pairs", v.scored_pairs},
                          {"scores", scores_json(v.sa, v.ca)},
                          {"cma_sa_.02", v.cma_sa},
                          {"cma_ca_.01", v.cma_ca},
                          {"accuracy_by_velocity", bins}});
    }
    json j = {{"overall", scores_json(report.sa, report.ca)},
              {"videos", videos},
              {"notes", "labels are snapped to contour indices for CA"}};
    return j.dump(2) + "\n";
}

std::string report_to_markdown(const EvalReport& report) {
    std::string out = "| Video | SA_.02 | SA_.04 | SA_.06 | CA_.01 | CA_.02 | CA_.03 |\n";
    out += "|---|---|---|---|---|---|---|\n";
    auto row = [&](const std::string& name, const double* sa, const double* ca) {
        out += "| " + name;
        for (int k = 0; k < 3; ++k) out += " | " + fixed3(sa[k]);
        for (int k = 0; k < 3; ++k) out += " | " + fixed3(ca[k]);
        out += " |\n";
    };
    for (const auto& v : report.videos) row(v.name, v.sa, v.ca);
    row("**all**", report.sa, report.ca);
    out += "\nCA snaps labels and predictions to their nearest contour index.\n";
    return out;
}

}  // namespace contrack
