#include <contrack/errors.hpp>
#include <contrack/labels.hpp>
#include <contrack/tracking.hpp>

#include <json.hpp>

#include <algorithm>
#include <cmath>

namespace contrack {

using nlohmann::json;

CorrespondenceMap track_pair(const Image& image_t, const Image& image_t1, const Contour& contour_t,
                             const Contour& contour_t1, const TrackerWeights& weights) {
    OffsetField f = predict_forward_offsets(image_t, image_t1, contour_t, contour_t1, weights);
    std::vector<Vec2> moved(contour_t.size());
    for (std::size_t i = 0; i < moved.size(); ++i) moved[i] = contour_t.points[i] + f.offsets[i];
    CorrespondenceMap m = snap_phi(moved, contour_t1);
    m.source_frame = contour_t.frame;
    m.target_frame = contour_t1.frame;
    return m;
}

const TrackStep& TrackSet::at(std::size_t trajectory, int frame) const {
    const Trajectory& tr = trajectories.at(trajectory);
    const int k = frame - tr.birth;
    if (k < 0 || k >= static_cast<int>(tr.path.size()))
        throw Error(ErrorKind::ConfigError, "trajectory does not cover frame " + std::to_string(frame));
    return tr.path[static_cast<std::size_t>(k)];
}

TrackSet chain_correspondences(const std::vector<Contour>& contours, const std::vector<CorrespondenceMap>& maps) {
    if (contours.empty()) throw Error(ErrorKind::ConfigError, "no contours to chain");
    if (maps.size() + 1 != contours.size())
        throw Error(ErrorKind::ShapeMismatch, "need one correspondence map per consecutive frame pair");
    TrackSet ts;
    for (std::size_t i = 0; i < contours[0].size(); ++i) ts.trajectories.push_back({0, {{0, i, contours[0].points[i]}}});
    for (std::size_t t = 0; t < maps.size(); ++t) {
        const Contour& next = contours[t + 1];
        const CorrespondenceMap& m = maps[t];
        if (m.size() != contours[t].size())
            throw Error(ErrorKind::ShapeMismatch, "correspondence map " + std::to_string(t) + " has wrong length");
        const int frame = static_cast<int>(t + 1);
        std::vector<bool> hit(next.size(), false);
        for (auto& tr : ts.trajectories) {
            std::size_t j = m.match[tr.path.back().index];
            if (j >= next.size()) throw Error(ErrorKind::ShapeMismatch, "correspondence index out of range");
            hit[j] = true;
            tr.path.push_back({frame, j, next.points[j]});
        }
        for (std::size_t j = 0; j < next.size(); ++j)
            if (!hit[j]) ts.trajectories.push_back({frame, {{frame, j, next.points[j]}}});
    }
    return ts;
}

TrackMethod parse_track_method(const std::string& name) {
    if (name == "learned") return TrackMethod::Learned;
    if (name == "mechanical") return TrackMethod::Mechanical;
    throw Error(ErrorKind::ConfigError, "unknown tracking method '" + name + "' (expected learned or mechanical)");
}

std::string to_string(TrackMethod method) { return method == TrackMethod::Learned ? "learned" : "mechanical"; }

std::vector<CorrespondenceMap> track_pairs(const std::vector<Image>& frames, const std::vector<Contour>& contours,
                                           const TrackOptions& options) {
    if (frames.size() < 2 || contours.size() != frames.size())
        throw Error(ErrorKind::ConfigError, "tracking needs at least two frames with one contour each");
    if (options.method == TrackMethod::Learned && options.weights == nullptr)
        throw Error(ErrorKind::ConfigError, "learned tracking needs a checkpoint");
    std::vector<CorrespondenceMap> maps;
    for (std::size_t t = 0; t + 1 < frames.size(); ++t) {
        if (options.method == TrackMethod::Learned) {
            maps.push_back(track_pair(frames[t], frames[t + 1], contours[t], contours[t + 1], *options.weights));
        } else {
            maps.push_back(solve_mechanical(contours[t], contours[t + 1], options.mechanical).correspondence);
        }
    }
    return maps;
}

TrackSet track_sequence(const std::vector<Image>& frames, const std::vector<Contour>& contours,
                        const TrackOptions& options) {
    return chain_correspondences(contours, track_pairs(frames, contours, options));
}

std::string trackset_to_json(const TrackSet& tracks) {
    json trs = json::array();
    for (const auto& tr : tracks.trajectories) {
        json path = json::array();
        for (const auto& s : tr.path) path.push_back({s.frame, s.index, s.point.x, s.point.y});
        trs.push_back({{"birth", tr.birth}, {"path", path}});
    }
    return json{{"trajectories", trs}}.dump() + "\n";
}

TrackSet trackset_from_json(const std::string& text) {
    TrackSet ts;
    try {
        json j = json::parse(text);
        for (const auto& tr : j.at("trajectories")) {
            Trajectory t;
            t.birth = tr.at("birth").get<int>();
            for (const auto& s : tr.at("path")) {
                if (!s.is_array() || s.size() != 4) throw Error(ErrorKind::ParseError, "path entries need 4 fields");
                t.path.push_back({s[0].get<int>(), s[1].get<std::size_t>(), {s[2].get<double>(), s[3].get<double>()}});
            }
            ts.trajectories.push_back(std::move(t));
        }
    } catch (const json::exception& e) {
        throw Error(ErrorKind::ParseError, std::string("TrackSet JSON: ") + e.what());
    }
    return ts;
}

void check_trackset(const TrackSet& tracks, const std::vector<Contour>& contours) {
    const int frames = static_cast<int>(contours.size());
    for (std::size_t k = 0; k < tracks.trajectories.size(); ++k) {
        const Trajectory& tr = tracks.trajectories[k];
        const std::string tag = "trajectory " + std::to_string(k);
        if (tr.path.empty()) throw Error(ErrorKind::ParseError, tag + " is empty");
        if (tr.path.front().frame != tr.birth) throw Error(ErrorKind::ParseError, tag + " does not start at its birth");
        for (std::size_t s = 0; s < tr.path.size(); ++s) {
            const TrackStep& st = tr.path[s];
            if (st.frame != tr.birth + static_cast<int>(s))
                throw Error(ErrorKind::ParseError, tag + " skips a frame");
            if (st.frame < 0 || st.frame >= frames) throw Error(ErrorKind::ParseError, tag + " leaves the video");
            const Contour& c = contours[static_cast<std::size_t>(st.frame)];
            if (st.index >= c.size() || !(c.points[st.index] == st.point))
                throw Error(ErrorKind::ParseError, tag + " names a point that is not on its frame's contour");
        }
    }
}

VelocityMap quantify_velocity(const TrackSet& tracks, const std::vector<Contour>& contours,
                              const std::vector<NormalField>& normals, std::size_t window_begin,
                              std::size_t window_end) {
    if (contours.empty() || normals.size() != contours.size())
        throw Error(ErrorKind::ShapeMismatch, "need one normal field per contour");
    const std::size_t n0 = contours[0].size();
    if (window_begin > window_end || window_end >= n0)
        throw Error(ErrorKind::WindowOutOfRange, "window [" + std::to_string(window_begin) + ", " +
                                                     std::to_string(window_end) + "] outside frame-0 contour of " +
                                                     std::to_string(n0) + " points");
    std::vector<const Trajectory*> by_index(n0, nullptr);
    for (const auto& tr : tracks.trajectories)
        if (tr.birth == 0 && tr.path.front().index < n0) by_index[tr.path.front().index] = &tr;

    VelocityMap vm;
    vm.window_begin = window_begin;
    vm.window_end = window_end;
    vm.steps = static_cast<int>(contours.size()) - 1;
    vm.values.assign(vm.rows() * static_cast<std::size_t>(std::max(vm.steps, 0)), 0.0);
    for (std::size_t r = 0; r < vm.rows(); ++r) {
        const Trajectory* tr = by_index[window_begin + r];
        if (tr == nullptr || static_cast<int>(tr->path.size()) < vm.steps + 1)
            throw Error(ErrorKind::WindowOutOfRange, "no full trajectory for frame-0 point " +
                                                         std::to_string(window_begin + r));
        for (int t = 0; t < vm.steps; ++t) {
            const TrackStep& a = tr->path[static_cast<std::size_t>(t)];
            const TrackStep& b = tr->path[static_cast<std::size_t>(t + 1)];
            const NormalField& nf = normals[static_cast<std::size_t>(t)];
            if (nf.size() < 3) continue;
            // contour ends carry no normal; borrow the nearest interior one
            const std::size_t i = std::clamp<std::size_t>(a.index, 1, nf.size() - 2);
            vm.values[r * vm.steps + t] = dot(b.point - a.point, nf[i]);
        }
    }
    return vm;
}

std::string velocity_to_csv(const VelocityMap& map) {
    std::string out = "position";
    for (int t = 0; t < map.steps; ++t) out += ",t" + std::to_string(t);
    out += "\n";
    for (std::size_t r = 0; r < map.rows(); ++r) {
        out += std::to_string(map.window_begin + r);
        for (int t = 0; t < map.steps; ++t) out += "," + format_double(map.at(r, t));
        out += "\n";
    }
    return out;
}

RgbImage render_velocity(const VelocityMap& map, int scale) {
    scale = std::max(scale, 1);
    double peak = 0.0;
    for (double v : map.values) peak = std::max(peak, std::fabs(v));
    RgbImage img(static_cast<int>(map.rows()) * scale, std::max(map.steps, 1) * scale);
    for (std::size_t r = 0; r < map.rows(); ++r) {
        for (int t = 0; t < map.steps; ++t) {
            const double s = peak > 0 ? map.at(r, t) / peak : 0.0;
            const auto fade = static_cast<std::uint8_t>(std::lround(255.0 * (1.0 - std::fabs(s))));
            std::uint8_t red = s >= 0 ? 255 : fade, blue = s <= 0 ? 255 : fade;
            for (int dy = 0; dy < scale; ++dy)
                for (int dx = 0; dx < scale; ++dx)
                    img.set(static_cast<int>(r) * scale + dy, t * scale + dx, red, fade, blue);
        }
    }
    return img;
}

namespace {

void draw_line(RgbImage& img, Vec2 a, Vec2 b, std::uint8_t r, std::uint8_t g, std::uint8_t bl) {
    const double len = distance(a, b);
    const int steps = std::max(1, static_cast<int>(std::ceil(len * 2)));
    for (int k = 0; k <= steps; ++k) {
        Vec2 p = a + (static_cast<double>(k) / steps) * (b - a);
        img.set(static_cast<int>(std::lround(p.y)), static_cast<int>(std::lround(p.x)), r, g, bl);
    }
}

}  // namespace

RgbImage render_correspondence(const Image& frame, const Contour& contour_t, const Contour& contour_t1,
                               const CorrespondenceMap& map, int arrow_stride) {
    if (map.size() != contour_t.size()) throw Error(ErrorKind::ShapeMismatch, "map does not match contour");
    RgbImage img(frame.height, frame.width);
    for (int r = 0; r < frame.height; ++r)
        for (int c = 0; c < frame.width; ++c) {
            auto v = static_cast<std::uint8_t>(std::lround(255.0 * std::clamp(frame.at(r, c), 0.0, 1.0) * 0.7));
            img.set(r, c, v, v, v);
        }
    for (Vec2 p : contour_t1.points)
        img.set(static_cast<int>(std::lround(p.y)), static_cast<int>(std::lround(p.x)), 255, 60, 60);
    for (Vec2 p : contour_t.points)
        img.set(static_cast<int>(std::lround(p.y)), static_cast<int>(std::lround(p.x)), 60, 255, 60);
    arrow_stride = std::max(arrow_stride, 1);
    for (std::size_t i = 0; i < contour_t.size(); i += static_cast<std::size_t>(arrow_stride)) {
        Vec2 a = contour_t.points[i], b = contour_t1.points[map.match[i]];
        draw_line(img, a, b, 255, 255, 255);
        // arrow head: two short strokes back from the tip
        Vec2 d = a - b;
        double len = norm(d);
        if (len > 1.5) {
            Vec2 u = (1.0 / len) * d;
            Vec2 side{-u.y, u.x};
            draw_line(img, b, b + 2.0 * u + 1.2 * side, 255, 255, 255);
            draw_line(img, b, b + 2.0 * u - 1.2 * side, 255, 255, 255);
        }
    }
    return img;
}

}  // namespace contrack
